#include "vbrisk/coarsegeo.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json_io.hpp"
#include "vbrisk/csv.hpp"

namespace vbrisk::coarsegeo {
namespace {

using detail::json;

bool is_token_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

// Log-sum-exp softmax in place.
void softmax(std::vector<double>& scores) {
  const double top = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double& s : scores) {
    s = std::exp(s - top);
    sum += s;
  }
  for (double& s : scores) s /= sum;
}

struct Problem {
  std::vector<SparseVector> x;
  std::vector<std::size_t> y;
  std::size_t labels = 0;
  std::size_t columns = 0;
  double lambda = 0.0;
};

// Objective and gradient at (weights, intercepts).
double objective(const Problem& pb, const std::vector<std::vector<double>>& w,
                 const std::vector<double>& b, std::vector<std::vector<double>>* gw,
                 std::vector<double>* gb) {
  const std::size_t n = pb.x.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  if (gw) {
    for (auto& row : *gw) std::fill(row.begin(), row.end(), 0.0);
    std::fill(gb->begin(), gb->end(), 0.0);
  }
  double loss = 0.0;
  std::vector<double> scores(pb.labels);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < pb.labels; ++k) {
      double s = b[k];
      for (const auto& [col, v] : pb.x[i].entries) s += w[k][col] * v;
      scores[k] = s;
    }
    const double top = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores) sum += std::exp(s - top);
    loss += (top + std::log(sum) - scores[pb.y[i]]) * inv_n;
    if (gw) {
      for (std::size_t k = 0; k < pb.labels; ++k) {
        const double g = (std::exp(scores[k] - top) / sum - (k == pb.y[i] ? 1.0 : 0.0)) * inv_n;
        (*gb)[k] += g;
        for (const auto& [col, v] : pb.x[i].entries) (*gw)[k][col] += g * v;
      }
    }
  }
  double sq = 0.0;
  for (std::size_t k = 0; k < pb.labels; ++k) {
    for (std::size_t c = 0; c < pb.columns; ++c) {
      sq += w[k][c] * w[k][c];
      if (gw) (*gw)[k][c] += pb.lambda * w[k][c];
    }
  }
  return loss + 0.5 * pb.lambda * sq;
}

}  // namespace

double SparseVector::norm() const noexcept {
  double sq = 0.0;
  for (const auto& e : entries) sq += e.second * e.second;
  return std::sqrt(sq);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_token_byte(c)) {
      current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::optional<std::uint32_t> ZoneModel::column(std::string_view token) const {
  const auto it = vocabulary.find(std::string(token));
  if (it == vocabulary.end()) return std::nullopt;
  return it->second;
}

std::size_t ZoneModel::majority_label() const {
  std::size_t best = 0;
  for (std::size_t k = 1; k < priors.size(); ++k) {
    if (priors[k] > priors[best]) best = k;
  }
  return best;
}

SparseVector featurize(std::string_view text, const ZoneModel& model) {
  std::set<std::uint32_t> columns;
  for (const auto& tok : tokenize(text)) {
    if (auto col = model.column(tok)) columns.insert(*col);
  }
  SparseVector v;
  double sq = 0.0;
  for (std::uint32_t col : columns) {
    const double value = model.idf[col];
    if (value == 0.0) continue;
    v.entries.emplace_back(col, value);
    sq += value * value;
  }
  if (sq > 0.0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& e : v.entries) e.second *= inv;
  }
  return v;
}

FitResult fit_detailed(std::span<const LabeledText> corpus, const FitOptions& options) {
  if (!(options.inverse_regularization > 0.0)) {
    fail(Errc::validation, "fit: inverse regularization must be > 0");
  }
  std::set<std::string> label_set;
  for (const auto& doc : corpus) label_set.insert(doc.zone_label);
  if (label_set.size() < 2) fail(Errc::validation, "fit: corpus needs at least two distinct zone labels");

  FitResult result;
  ZoneModel& model = result.model;
  model.labels.assign(label_set.begin(), label_set.end());
  model.inverse_regularization = options.inverse_regularization;

  // Vocabulary in lexicographic order; document frequencies over distinct tokens.
  std::map<std::string, std::size_t> df;
  std::vector<std::set<std::string>> doc_tokens;
  doc_tokens.reserve(corpus.size());
  for (const auto& doc : corpus) {
    const auto toks = tokenize(doc.text);
    std::set<std::string> distinct(toks.begin(), toks.end());
    for (const auto& t : distinct) ++df[t];
    doc_tokens.push_back(std::move(distinct));
  }
  const double n_docs = static_cast<double>(corpus.size());
  for (const auto& [tok, count] : df) {
    model.vocabulary.emplace(tok, static_cast<std::uint32_t>(model.tokens.size()));
    model.tokens.push_back(tok);
    model.idf.push_back(std::log((1.0 + n_docs) / (1.0 + static_cast<double>(count))) + 1.0);
  }

  Problem pb;
  pb.labels = model.labels.size();
  pb.columns = model.tokens.size();
  pb.lambda = 1.0 / (options.inverse_regularization * n_docs);
  model.priors.assign(pb.labels, 0.0);
  for (const auto& doc : corpus) {
    const auto k = static_cast<std::size_t>(
        std::lower_bound(model.labels.begin(), model.labels.end(), doc.zone_label) -
        model.labels.begin());
    pb.y.push_back(k);
    model.priors[k] += 1.0 / n_docs;
    pb.x.push_back(featurize(doc.text, model));
  }

  // Per-sample curvature of the softmax loss is at most 0.5 * (||x||^2 + 1).
  double max_sq = 0.0;
  for (const auto& x : pb.x) max_sq = std::max(max_sq, x.norm() * x.norm());
  const double lipschitz = 0.5 * (max_sq + 1.0) + pb.lambda;
  const double step = 1.0 / lipschitz;

  model.weights.assign(pb.labels, std::vector<double>(pb.columns, 0.0));
  model.intercepts.assign(pb.labels, 0.0);
  auto gw = model.weights;
  auto gb = model.intercepts;

  for (std::size_t epoch = 0;; ++epoch) {
    const double loss = objective(pb, model.weights, model.intercepts, &gw, &gb);
    result.loss_history.push_back(loss);
    double gnorm_sq = 0.0;
    for (std::size_t k = 0; k < pb.labels; ++k) {
      gnorm_sq += gb[k] * gb[k];
      for (double g : gw[k]) gnorm_sq += g * g;
    }
    if (std::sqrt(gnorm_sq) < options.gradient_tolerance) {
      result.converged = true;
      break;
    }
    if (epoch == options.max_epochs) break;
    for (std::size_t k = 0; k < pb.labels; ++k) {
      model.intercepts[k] -= step * gb[k];
      for (std::size_t c = 0; c < pb.columns; ++c) model.weights[k][c] -= step * gw[k][c];
    }
    result.epochs = epoch + 1;
  }
  return result;
}

ZoneModel fit(std::span<const LabeledText> corpus, const FitOptions& options) {
  return fit_detailed(corpus, options).model;
}

std::vector<double> zone_probabilities(std::string_view text, const ZoneModel& model) {
  if (!model.fitted()) fail(Errc::config, "zone model is not fitted");
  const SparseVector x = featurize(text, model);
  if (x.empty()) return model.priors;
  std::vector<double> scores(model.labels.size());
  for (std::size_t k = 0; k < scores.size(); ++k) {
    double s = model.intercepts[k];
    for (const auto& [col, v] : x.entries) s += model.weights[k][col] * v;
    scores[k] = s;
  }
  softmax(scores);
  return scores;
}

ZonePrediction predict_zone(std::string_view text, const ZoneModel& model) {
  const auto probs = zone_probabilities(text, model);
  // Strict comparison keeps the earliest (lexicographically smallest) label on ties.
  std::size_t best = 0;
  for (std::size_t k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[best]) best = k;
  }
  return {model.labels[best], probs[best]};
}

std::string model_to_json(const ZoneModel& model) {
  detail::ordered_json j;
  j["format"] = "vbrisk-zone-model/1";
  j["inverse_regularization"] = model.inverse_regularization;
  j["labels"] = model.labels;
  j["priors"] = model.priors;
  j["intercepts"] = model.intercepts;
  j["vocabulary"] = model.tokens;
  j["idf"] = model.idf;
  j["weights"] = model.weights;
  return j.dump() + "\n";
}

ZoneModel model_from_json(std::string_view text) {
  const json j = detail::parse_json(std::string(text), "zone model");
  ZoneModel m;
  try {
    if (j.at("format").get<std::string>() != "vbrisk-zone-model/1") {
      fail(Errc::format, "zone model: unsupported format tag");
    }
    m.inverse_regularization = j.at("inverse_regularization").get<double>();
    m.labels = j.at("labels").get<std::vector<std::string>>();
    m.priors = j.at("priors").get<std::vector<double>>();
    m.intercepts = j.at("intercepts").get<std::vector<double>>();
    m.tokens = j.at("vocabulary").get<std::vector<std::string>>();
    m.idf = j.at("idf").get<std::vector<double>>();
    m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    fail(Errc::format, std::string("zone model: ") + e.what());
  }
  const std::size_t z = m.labels.size();
  if (z < 2 || m.priors.size() != z || m.intercepts.size() != z || m.weights.size() != z ||
      m.idf.size() != m.tokens.size()) {
    fail(Errc::format, "zone model: inconsistent dimensions");
  }
  if (!std::is_sorted(m.labels.begin(), m.labels.end()) ||
      std::adjacent_find(m.labels.begin(), m.labels.end()) != m.labels.end()) {
    fail(Errc::format, "zone model: labels must be sorted and unique");
  }
  for (const auto& row : m.weights) {
    if (row.size() != m.tokens.size()) fail(Errc::format, "zone model: weight row has wrong width");
  }
  for (double v : m.idf) {
    if (!std::isfinite(v) || v < 0.0) fail(Errc::format, "zone model: idf must be finite and >= 0");
  }
  for (std::size_t c = 0; c < m.tokens.size(); ++c) {
    m.vocabulary.emplace(m.tokens[c], static_cast<std::uint32_t>(c));
  }
  return m;
}

void save_model(const std::string& path, const ZoneModel& model) {
  detail::write_text(path, model_to_json(model));
}

ZoneModel load_model(const std::string& path) { return model_from_json(detail::read_text(path)); }

std::vector<LabeledText> parse_corpus(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) fail(Errc::validation, "corpus: missing header row");
  const csv::Header header(rows[0]);
  const std::size_t label = header.require("zone_label");
  const std::size_t body = header.require("text");
  std::vector<LabeledText> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() <= std::max(label, body)) {
      fail(Errc::format, "corpus: row " + std::to_string(r + 1) + " has too few columns");
    }
    if (row[label].empty()) fail(Errc::validation, "corpus: empty zone_label on row " + std::to_string(r + 1));
    out.push_back({row[body], row[label]});
  }
  return out;
}

std::vector<LabeledText> load_corpus(const std::string& path) {
  return parse_corpus(detail::read_text(path));
}

std::string format_corpus(std::span<const LabeledText> corpus) {
  std::ostringstream out;
  csv::write_row(out, {"zone_label", "text"});
  for (const auto& doc : corpus) csv::write_row(out, {doc.zone_label, doc.text});
  return out.str();
}

}  // namespace vbrisk::coarsegeo
