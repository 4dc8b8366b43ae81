/*
 * Copyright 2026 The Tagrank Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "tagrank/topic_model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <thread>

#include "tagrank/error.hpp"
#include "tagrank/io.hpp"
#include "tagrank/model_json.hpp"

namespace tagrank {

namespace {

struct IndexedImage {
  std::size_t owner;
  std::vector<std::size_t> tags;
  std::vector<std::size_t> groups;
};

std::vector<IndexedImage> index_corpus(const Corpus& corpus, const Vocabulary& vocab,
                                       bool with_groups) {
  std::vector<IndexedImage> out;
  out.reserve(corpus.size());
  const auto resolve = [](const IndexMap& map, const std::string& name, const char* what) {
    const auto index = map.index_of(name);
    if (!index) {
      throw InvariantError(std::string(what) + " \"" + name + "\" is not in the vocabulary");
    }
    return *index;
  };
  for (const auto& image : corpus.images()) {
    IndexedImage indexed;
    indexed.owner = resolve(vocab.users, image.owner, "user");
    for (const auto& tag : image.tags) indexed.tags.push_back(resolve(vocab.tags, tag, "tag"));
    if (with_groups) {
      for (const auto& group : image.groups) {
        indexed.groups.push_back(resolve(vocab.groups, group, "group"));
      }
    }
    out.push_back(std::move(indexed));
  }
  return out;
}

// Runs fn(begin, end) over [0, n) split into contiguous chunks. Each chunk
// writes disjoint output, so results are independent of the thread count.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> workers;
  const auto chunk = (n + threads - 1) / threads;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    workers.emplace_back(fn, begin, std::min(n, begin + chunk));
  }
  for (auto& w : workers) w.join();
}

// Normalizes every column to a distribution; an all-zero column becomes
// uniform. Entries below `floor` are raised to it and the column is
// renormalized.
void normalize_columns(Matrix& m, double floor) {
  if (m.rows() == 0) {
    return;
  }
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double sum = m.column_sum(c);
    if (!(sum > 0.0)) {
      for (std::size_t r = 0; r < m.rows(); ++r) m(r, c) = 1.0 / static_cast<double>(m.rows());
      continue;
    }
    for (std::size_t r = 0; r < m.rows(); ++r) m(r, c) /= sum;
    if (floor <= 0.0) {
      continue;
    }
    bool raised = false;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (m(r, c) < floor) {
        m(r, c) = floor;
        raised = true;
      }
    }
    if (raised) {
      sum = m.column_sum(c);
      for (std::size_t r = 0; r < m.rows(); ++r) m(r, c) /= sum;
    }
  }
}

// Writes p(z | annotation, u) for one annotation into out.
void posterior(const Matrix& p_x_given_z, std::size_t x, const Matrix& p_z_given_u,
               std::size_t u, std::span<double> out) {
  const auto k = out.size();
  double sum = 0.0;
  for (std::size_t z = 0; z < k; ++z) {
    out[z] = p_z_given_u(z, u) * p_x_given_z(x, z);
    sum += out[z];
  }
  if (sum > 0.0) {
    for (auto& v : out) v /= sum;
  } else {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(k));
  }
}

double mixture(const Matrix& p_x_given_z, std::size_t x, const Matrix& p_z_given_u,
               std::size_t u) {
  double sum = 0.0;
  for (std::size_t z = 0; z < p_z_given_u.rows(); ++z) {
    sum += p_z_given_u(z, u) * p_x_given_z(x, z);
  }
  return sum;
}

// Uniform on (0, 1], 53 random bits; identical across standard libraries.
double unit_positive(std::mt19937_64& rng) {
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

std::vector<double> empirical_user_prior(const Vocabulary& vocab, const Corpus& corpus) {
  std::vector<double> p_u(vocab.users.size(), 0.0);
  for (const auto& image : corpus.images()) {
    const auto u = vocab.users.index_of(image.owner);
    if (!u) {
      throw InvariantError("owner \"" + image.owner + "\" is not in the vocabulary");
    }
    p_u[*u] += 1.0;
  }
  const auto total = static_cast<double>(corpus.size());
  for (auto& v : p_u) v = total > 0.0 ? v / total : 0.0;
  return p_u;
}

}  // namespace

double Matrix::column_sum(std::size_t c) const {
  double sum = 0.0;
  for (std::size_t r = 0; r < rows_; ++r) sum += (*this)(r, c);
  return sum;
}

void ModelConfig::validate() const {
  if (k == 0) throw ConfigError("topic count must be at least 1");
  if (max_iters == 0) throw ConfigError("max_iters must be at least 1");
  if (!(rel_tol > 0.0)) throw ConfigError("rel_tol must be positive");
  if (!(prob_floor >= 0.0) || prob_floor >= 1.0) {
    throw ConfigError("prob_floor must be in [0, 1)");
  }
}

void TopicModel::check_invariants(double tol) const {
  const auto check_columns = [tol](const Matrix& m, const char* name) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      for (std::size_t r = 0; r < m.rows(); ++r) {
        if (!(m(r, c) >= 0.0)) {
          throw InvariantError(std::string(name) + " has a negative or NaN entry");
        }
      }
      if (m.rows() > 0 && std::abs(m.column_sum(c) - 1.0) > tol) {
        throw InvariantError(std::string(name) + " column " + std::to_string(c) +
                             " does not sum to 1");
      }
    }
  };
  check_columns(p_t_given_z, "p(t|z)");
  check_columns(p_g_given_z, "p(g|z)");
  check_columns(p_z_given_u, "p(z|u)");
  double total = 0.0;
  for (const auto v : p_u) {
    if (!(v >= 0.0)) throw InvariantError("p(u) has a negative or NaN entry");
    total += v;
  }
  if (std::abs(total - 1.0) > tol) throw InvariantError("p(u) does not sum to 1");
}

TopicModel init_params(const Vocabulary& vocab, const Corpus& corpus,
                       const ModelConfig& config) {
  config.validate();
  if (vocab.users.empty() || vocab.tags.empty()) {
    throw InputError("cannot initialise a model from an empty vocabulary");
  }
  TopicModel model;
  model.vocab = vocab;
  model.config = config;
  const auto k = config.k;
  std::mt19937_64 rng(config.seed);

  model.p_t_given_z = Matrix(vocab.tags.size(), k);
  for (auto& v : model.p_t_given_z.data()) v = unit_positive(rng);
  if (config.use_groups && !vocab.groups.empty()) {
    model.p_g_given_z = Matrix(vocab.groups.size(), k);
    for (auto& v : model.p_g_given_z.data()) v = unit_positive(rng);
  }
  model.p_z_given_u = Matrix(k, vocab.users.size());
  for (auto& v : model.p_z_given_u.data()) v = unit_positive(rng);

  normalize_columns(model.p_t_given_z, config.prob_floor);
  normalize_columns(model.p_g_given_z, config.prob_floor);
  normalize_columns(model.p_z_given_u, config.prob_floor);
  model.p_u = empirical_user_prior(vocab, corpus);
  return model;
}

EMPosteriors e_step(const TopicModel& model, const Corpus& corpus) {
  const auto indexed = index_corpus(corpus, model.vocab, model.has_groups());
  const auto k = model.k();
  EMPosteriors post;
  post.k = k;
  post.tag.resize(indexed.size());
  post.group.resize(indexed.size());
  parallel_for(indexed.size(), model.config.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& image = indexed[i];
      auto& tag_out = post.tag[i];
      tag_out.resize(image.tags.size() * k);
      for (std::size_t s = 0; s < image.tags.size(); ++s) {
        posterior(model.p_t_given_z, image.tags[s], model.p_z_given_u, image.owner,
                  {tag_out.data() + s * k, k});
      }
      auto& group_out = post.group[i];
      group_out.resize(image.groups.size() * k);
      for (std::size_t s = 0; s < image.groups.size(); ++s) {
        posterior(model.p_g_given_z, image.groups[s], model.p_z_given_u, image.owner,
                  {group_out.data() + s * k, k});
      }
    }
  });
  return post;
}

TopicModel m_step(const EMPosteriors& posteriors, const Corpus& corpus,
                  const Vocabulary& vocab, const ModelConfig& config) {
  config.validate();
  const auto k = config.k;
  if (posteriors.k != k || posteriors.tag.size() != corpus.size()) {
    throw InvariantError("posteriors do not match the corpus or topic count");
  }
  const bool with_groups = config.use_groups && !vocab.groups.empty();
  const auto indexed = index_corpus(corpus, vocab, with_groups);

  TopicModel model;
  model.vocab = vocab;
  model.config = config;
  model.p_t_given_z = Matrix(vocab.tags.size(), k);
  if (with_groups) model.p_g_given_z = Matrix(vocab.groups.size(), k);
  model.p_z_given_u = Matrix(k, vocab.users.size());

  for (std::size_t i = 0; i < indexed.size(); ++i) {
    const auto& image = indexed[i];
    if (posteriors.tag[i].size() != image.tags.size() * k) {
      throw InvariantError("tag posteriors do not match image " + std::to_string(i));
    }
    for (std::size_t s = 0; s < image.tags.size(); ++s) {
      const auto post = posteriors.tag_posterior(i, s);
      for (std::size_t z = 0; z < k; ++z) {
        model.p_t_given_z(image.tags[s], z) += post[z];
        model.p_z_given_u(z, image.owner) += post[z];
      }
    }
    if (!with_groups) {
      continue;
    }
    if (i >= posteriors.group.size() || posteriors.group[i].size() != image.groups.size() * k) {
      throw InvariantError("group posteriors do not match image " + std::to_string(i));
    }
    for (std::size_t s = 0; s < image.groups.size(); ++s) {
      const auto post = posteriors.group_posterior(i, s);
      for (std::size_t z = 0; z < k; ++z) {
        model.p_g_given_z(image.groups[s], z) += post[z];
        model.p_z_given_u(z, image.owner) += post[z];
      }
    }
  }

  normalize_columns(model.p_t_given_z, config.prob_floor);
  normalize_columns(model.p_g_given_z, config.prob_floor);
  normalize_columns(model.p_z_given_u, config.prob_floor);
  model.p_u = empirical_user_prior(vocab, corpus);
  return model;
}

double log_likelihood(const TopicModel& model, const Corpus& corpus) {
  const auto indexed = index_corpus(corpus, model.vocab, model.has_groups());
  const auto floor = model.config.prob_floor;
  const auto safe_log = [floor](double p) { return std::log(std::max(p, floor)); };
  std::vector<double> per_image(indexed.size(), 0.0);
  parallel_for(indexed.size(), model.config.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& image = indexed[i];
      double ll = safe_log(model.p_u[image.owner]);
      for (const auto t : image.tags) {
        ll += safe_log(mixture(model.p_t_given_z, t, model.p_z_given_u, image.owner));
      }
      for (const auto g : image.groups) {
        ll += safe_log(mixture(model.p_g_given_z, g, model.p_z_given_u, image.owner));
      }
      per_image[i] = ll;
    }
  });
  double total = 0.0;
  for (const auto v : per_image) total += v;
  return total;
}

std::pair<TopicModel, TrainStats> train(const Corpus& corpus, const Vocabulary& vocab,
                                        const ModelConfig& config) {
  config.validate();
  if (corpus.empty()) {
    throw InputError("cannot train on an empty corpus");
  }
  TrainStats stats;
  stats.seed = config.seed;
  auto model = init_params(vocab, corpus, config);
  double previous = log_likelihood(model, corpus);
  for (std::size_t iter = 1; iter <= config.max_iters; ++iter) {
    const auto posteriors = e_step(model, corpus);
    model = m_step(posteriors, corpus, vocab, config);
    const double current = log_likelihood(model, corpus);
    stats.log_likelihood_trace.push_back(current);
    stats.iterations = iter;
    if (std::abs(current - previous) <= config.rel_tol * std::abs(previous)) {
      stats.converged = true;
      break;
    }
    previous = current;
  }
  return {std::move(model), std::move(stats)};
}

std::vector<TopTag> top_tags_per_topic(const TopicModel& model, std::size_t n) {
  if (n == 0) {
    throw ConfigError("top tag count must be at least 1");
  }
  const auto& ptz = model.p_t_given_z;
  std::vector<TopTag> rows;
  std::vector<std::size_t> order(ptz.rows());
  for (std::size_t z = 0; z < model.k(); ++z) {
    for (std::size_t t = 0; t < order.size(); ++t) order[t] = t;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ptz(a, z) > ptz(b, z); });
    const auto count = std::min(n, order.size());
    for (std::size_t r = 0; r < count; ++r) {
      rows.push_back({z, model.vocab.tags.name_of(order[r]), ptz(order[r], z)});
    }
  }
  return rows;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const nlohmann::json& doc, std::size_t rows, std::size_t cols,
                        const char* name) {
  if (doc.at("rows").get<std::size_t>() != rows || doc.at("cols").get<std::size_t>() != cols) {
    throw InputError(std::string("matrix ") + name + " has the wrong shape");
  }
  Matrix m(rows, cols);
  const auto& data = doc.at("data");
  if (!data.is_array() || data.size() != rows * cols) {
    throw InputError(std::string("matrix ") + name + " has the wrong number of entries");
  }
  for (std::size_t i = 0; i < data.size(); ++i) m.data()[i] = data[i].get<double>();
  return m;
}

IndexMap index_map_from_json(const nlohmann::json& names) {
  IndexMap map;
  for (const auto& name : names) {
    const auto before = map.size();
    if (map.add(name.get<std::string>()) != before) {
      throw InputError("duplicate vocabulary entry \"" + name.get<std::string>() + "\"");
    }
  }
  return map;
}

}  // namespace

nlohmann::json model_to_json(const TopicModel& model) {
  nlohmann::json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["config"] = {{"k", model.config.k},
                   {"use_groups", model.config.use_groups},
                   {"max_iters", model.config.max_iters},
                   {"rel_tol", model.config.rel_tol},
                   {"seed", model.config.seed},
                   {"prob_floor", model.config.prob_floor}};
  doc["vocabulary"] = {{"tags", model.vocab.tags.names()},
                       {"groups", model.vocab.groups.names()},
                       {"users", model.vocab.users.names()}};
  doc["p_t_given_z"] = matrix_to_json(model.p_t_given_z);
  doc["p_g_given_z"] = matrix_to_json(model.p_g_given_z);
  doc["p_z_given_u"] = matrix_to_json(model.p_z_given_u);
  doc["p_u"] = model.p_u;
  return doc;
}

TopicModel model_from_json(const nlohmann::json& doc) {
  try {
    const auto version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw InputError("unsupported model format_version " + std::to_string(version));
    }
    TopicModel model;
    const auto& cfg = doc.at("config");
    model.config.k = cfg.at("k").get<std::size_t>();
    model.config.use_groups = cfg.at("use_groups").get<bool>();
    model.config.max_iters = cfg.at("max_iters").get<std::size_t>();
    model.config.rel_tol = cfg.at("rel_tol").get<double>();
    model.config.seed = cfg.at("seed").get<std::uint64_t>();
    model.config.prob_floor = cfg.at("prob_floor").get<double>();
    try {
      model.config.validate();
    } catch (const ConfigError& e) {
      throw InputError(std::string("model config: ") + e.what());
    }
    const auto& vocab = doc.at("vocabulary");
    model.vocab.tags = index_map_from_json(vocab.at("tags"));
    model.vocab.groups = index_map_from_json(vocab.at("groups"));
    model.vocab.users = index_map_from_json(vocab.at("users"));
    const auto k = model.config.k;
    model.p_t_given_z = matrix_from_json(doc.at("p_t_given_z"), model.vocab.tags.size(), k,
                                         "p_t_given_z");
    const auto& pgz = doc.at("p_g_given_z");
    if (pgz.at("rows").get<std::size_t>() != 0) {
      model.p_g_given_z =
          matrix_from_json(pgz, model.vocab.groups.size(), k, "p_g_given_z");
    }
    model.p_z_given_u = matrix_from_json(doc.at("p_z_given_u"), k, model.vocab.users.size(),
                                         "p_z_given_u");
    model.p_u = doc.at("p_u").get<std::vector<double>>();
    if (model.p_u.size() != model.vocab.users.size()) {
      throw InputError("p_u has the wrong length");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model: ") + e.what());
  }
}

void save_model(const TopicModel& model, std::ostream& out) {
  out << model_to_json(model).dump(1) << '\n';
}

void save_model(const TopicModel& model, const std::filesystem::path& path) {
  io::write_file_atomic(path, [&](std::ostream& out) { save_model(model, out); });
}

TopicModel load_model(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("malformed model: ") + e.what());
  }
  return model_from_json(doc);
}

TopicModel load_model(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  try {
    return load_model(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace tagrank
