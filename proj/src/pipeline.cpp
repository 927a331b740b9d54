#include "fairpost/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "fairpost/errors.hpp"

namespace fairpost {

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const json& node, const char* context) {
  if (!node.is_string()) {
    throw FormatError(std::string("model document: ") + context + " must be a decimal string");
  }
  const std::string& text = node.get_ref<const std::string&>();
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    throw FormatError(std::string("model document: cannot parse number '") + text + "' in " +
                      context);
  }
  return v;
}

json doubles_to_json(const std::vector<double>& values) {
  json arr = json::array();
  for (double v : values) {
    arr.push_back(format_double(v));
  }
  return arr;
}

std::vector<double> doubles_from_json(const json& arr, const char* context) {
  if (!arr.is_array()) {
    throw FormatError(std::string("model document: ") + context + " must be an array");
  }
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& node : arr) {
    out.push_back(parse_double(node, context));
  }
  return out;
}

std::vector<double> resolve_weights(const ScoredDataset& data, const FitOptions& options) {
  const int m = data.num_groups();
  switch (options.weight_policy) {
    case FitOptions::WeightPolicy::kBalanced:
      return balanced_weights(m);
    case FitOptions::WeightPolicy::kCounts: {
      std::vector<double> counts(m, 0.0);
      for (const auto& row : data.rows) {
        counts[row.group] += 1.0;
      }
      return counts_weights(counts);
    }
    case FitOptions::WeightPolicy::kExplicit:
      if (static_cast<int>(options.explicit_weights.size()) != m) {
        throw InvalidInputError("fit: explicit weights must match the group count");
      }
      return options.explicit_weights;
  }
  throw InvalidInputError("fit: unknown weight policy");
}

// Empirical distribution of one group's smoothing-perturbed scores.  Each row
// contributes fit_draws projected draws of mass 1/(rows * fit_draws).
EmpiricalDistribution smoothed_empirical(const ScoredDataset& data, int group,
                                         const SmoothingConfig& cfg,
                                         std::optional<int> round_digits) {
  ScoredDataset perturbed;
  perturbed.k = data.k;
  perturbed.group_names = data.group_names;
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    const auto& row = data.rows[r];
    if (row.group != group) {
      continue;
    }
    const SimplexPoint base = project_to_simplex(row.score);
    RngStream stream(cfg.seed, static_cast<std::uint64_t>(r));
    const auto draws = smooth_draws(base, cfg, cfg.fit_draws, stream);
    for (const auto& draw : draws) {
      perturbed.rows.push_back({group, draw, std::nullopt});
    }
  }
  return empirical_from_scores(perturbed, group, round_digits);
}

}  // namespace

PostProcessorModel fit(const ScoredDataset& data, const FitOptions& options) {
  data.validate_for_fit();
  const int m = data.num_groups();
  const int k = data.k;

  SmoothingConfig smoothing = options.smoothing;
  if (smoothing.epsilon <= 0.0) {
    smoothing.epsilon = 0.2 / static_cast<double>(k);
  }
  if (smoothing.fit_draws < 1 || smoothing.eval_draws < 1) {
    throw InvalidInputError("fit: smoothing draws must be at least 1");
  }
  smoothing.seed = options.seed;

  // Per-group empirical distributions; smooth mode perturbs first.
  const bool smooth_mode = options.mode == FitOptions::Mode::kSmooth;
  std::vector<EmpiricalDistribution> dists(m);
  std::vector<int> group_rows(m, 0);
  for (const auto& row : data.rows) {
    ++group_rows[row.group];
  }
  for (int a = 0; a < m; ++a) {
    dists[a] = smooth_mode ? smoothed_empirical(data, a, smoothing, options.round_digits)
                           : empirical_from_scores(data, a, options.round_digits);
  }

  FitOptions::Mode mode = options.mode;
  if (mode == FitOptions::Mode::kAuto) {
    bool lookup_ok = true;
    for (int a = 0; a < m; ++a) {
      const double fraction = static_cast<double>(dists[a].size()) / group_rows[a];
      if (dists[a].size() > options.lookup_support_limit ||
          fraction >= options.lookup_distinct_fraction) {
        lookup_ok = false;
        break;
      }
    }
    mode = lookup_ok ? FitOptions::Mode::kLookup : FitOptions::Mode::kNn;
  }

  const std::vector<double> weights = resolve_weights(data, options);
  const BarycenterResult bary = solve_barycenter(dists, weights, options.barycenter);

  PostProcessorModel model;
  model.k = k;
  model.m = m;
  model.group_names = data.group_names;
  model.weights = weights;
  model.q = bary.q;
  model.diagnostics.objective = bary.objective;
  model.diagnostics.optimality_gap = bary.optimality_gap;
  model.diagnostics.margins.assign(m, std::numeric_limits<double>::quiet_NaN());
  model.diagnostics.disagreements.assign(m, -1);
  model.transports.resize(m);
  for (int a = 0; a < m; ++a) {
    model.diagnostics.support_sizes.push_back(dists[a].size());
    GroupTransport& transport = model.transports[a];
    if (mode == FitOptions::Mode::kLookup) {
      transport.kind = TransportKind::kLookup;
      transport.lookup = lookup_from_plan(bary.plans[a], dists[a]);
      continue;
    }
    transport.kind = smooth_mode ? TransportKind::kSmooth : TransportKind::kNn;
    const BoundaryMatrix boundaries = extract_boundaries(bary.plans[a], dists[a]);
    CenterPoint center;
    try {
      center = find_center(boundaries);
    } catch (const GeometryError& e) {
      throw GeometryError("fit: group '" + data.group_names[a] + "': " + e.what());
    }
    transport.nn = psi_from_center(center);
    transport.smoothing = smoothing;
    model.diagnostics.margins[a] = center.margin;
    model.diagnostics.disagreements[a] = count_disagreements(transport.nn, bary.plans[a], dists[a]);
  }
  return model;
}

std::vector<Prediction> apply(const PostProcessorModel& model, const ScoredDataset& data,
                              std::uint64_t seed) {
  if (data.k != model.k) {
    throw DataError("apply: dataset class count does not match the model");
  }
  // Map dataset group indices onto model group indices by token.
  std::vector<int> to_model(data.num_groups(), -1);
  for (int g = 0; g < data.num_groups(); ++g) {
    for (int a = 0; a < model.m; ++a) {
      if (model.group_names[a] == data.group_names[g]) {
        to_model[g] = a;
        break;
      }
    }
    if (to_model[g] < 0) {
      throw DataError("apply: group '" + data.group_names[g] + "' was not present at fit time");
    }
  }

  std::vector<Prediction> preds;
  preds.reserve(data.rows.size());
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    const auto& row = data.rows[r];
    const GroupTransport& transport = model.transports[to_model[row.group]];
    const SimplexPoint s = project_to_simplex(row.score);
    RngStream stream(seed, static_cast<std::uint64_t>(r));
    Prediction pred;
    switch (transport.kind) {
      case TransportKind::kNn: {
        pred.label = evaluate_nn(transport.nn, s);
        pred.pmf.assign(model.k, 0.0);
        pred.pmf[pred.label] = 1.0;
        break;
      }
      case TransportKind::kLookup: {
        const int idx = lookup_row_index(transport.lookup, s);
        pred.pmf = transport.lookup.kernel[idx];
        pred.label = stream.categorical(pred.pmf);
        break;
      }
      case TransportKind::kSmooth: {
        const auto draws =
            smooth_draws(s, transport.smoothing, transport.smoothing.eval_draws, stream);
        pred.pmf.assign(model.k, 0.0);
        for (const auto& draw : draws) {
          pred.pmf[evaluate_nn(transport.nn, project_to_simplex(draw))] += 1.0;
        }
        for (double& v : pred.pmf) {
          v /= static_cast<double>(draws.size());
        }
        pred.label = stream.categorical(pred.pmf);
        break;
      }
    }
    preds.push_back(std::move(pred));
  }
  return preds;
}

std::string model_to_json(const PostProcessorModel& model) {
  json doc;
  doc["version"] = PostProcessorModel::kFormatVersion;
  doc["k"] = model.k;
  doc["m"] = model.m;
  doc["group_names"] = model.group_names;
  doc["weights"] = doubles_to_json(model.weights);
  doc["q"] = doubles_to_json(model.q.pmf);

  json groups = json::array();
  for (const auto& transport : model.transports) {
    json g;
    switch (transport.kind) {
      case TransportKind::kLookup: {
        g["mode"] = "lookup";
        json support = json::array();
        for (const auto& atom : transport.lookup.support) {
          support.push_back(doubles_to_json(atom.coords));
        }
        json rows = json::array();
        for (const auto& row : transport.lookup.kernel) {
          rows.push_back(doubles_to_json(row));
        }
        g["kernel"] = {{"support", std::move(support)}, {"rows", std::move(rows)}};
        break;
      }
      case TransportKind::kNn:
        g["mode"] = "nn";
        g["psi"] = doubles_to_json(transport.nn.psi);
        break;
      case TransportKind::kSmooth:
        g["mode"] = "smooth";
        g["psi"] = doubles_to_json(transport.nn.psi);
        g["smoothing"] = {{"epsilon", format_double(transport.smoothing.epsilon)},
                          {"eval_draws", transport.smoothing.eval_draws}};
        break;
    }
    groups.push_back(std::move(g));
  }
  doc["groups"] = std::move(groups);

  json diag;
  diag["objective"] = format_double(model.diagnostics.objective);
  diag["optimality_gap"] = format_double(model.diagnostics.optimality_gap);
  diag["support_sizes"] = model.diagnostics.support_sizes;
  json margins = json::array();
  for (double v : model.diagnostics.margins) {
    margins.push_back(std::isnan(v) ? json(nullptr) : json(format_double(v)));
  }
  diag["margins"] = std::move(margins);
  diag["disagreements"] = model.diagnostics.disagreements;
  diag["assumes_calibrated_scores"] = model.diagnostics.assumes_calibrated_scores;
  doc["diagnostics"] = std::move(diag);

  return doc.dump(2);
}

PostProcessorModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model document: not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw FormatError("model document: top level must be an object");
  }
  if (!doc.contains("version") || !doc["version"].is_string()) {
    throw FormatError("model document: missing version field");
  }
  const std::string version = doc["version"].get<std::string>();
  if (version != PostProcessorModel::kFormatVersion) {
    throw FormatError("model document: unsupported format version '" + version + "' (expected '" +
                      PostProcessorModel::kFormatVersion + "')");
  }

  PostProcessorModel model;
  try {
    model.k = doc.at("k").get<int>();
    model.m = doc.at("m").get<int>();
    model.group_names = doc.at("group_names").get<std::vector<std::string>>();
    model.weights = doubles_from_json(doc.at("weights"), "weights");
    model.q.pmf = doubles_from_json(doc.at("q"), "q");

    const json& groups = doc.at("groups");
    if (!groups.is_array()) {
      throw FormatError("model document: groups must be an array");
    }
    for (const auto& g : groups) {
      GroupTransport transport;
      const std::string mode = g.at("mode").get<std::string>();
      if (mode == "lookup") {
        transport.kind = TransportKind::kLookup;
        const json& kernel = g.at("kernel");
        for (const auto& atom : kernel.at("support")) {
          transport.lookup.support.push_back(SimplexPoint{doubles_from_json(atom, "support atom")});
        }
        for (const auto& row : kernel.at("rows")) {
          transport.lookup.kernel.push_back(doubles_from_json(row, "kernel row"));
        }
      } else if (mode == "nn" || mode == "smooth") {
        transport.kind = mode == "nn" ? TransportKind::kNn : TransportKind::kSmooth;
        transport.nn.psi = doubles_from_json(g.at("psi"), "psi");
        if (mode == "smooth") {
          const json& sm = g.at("smoothing");
          transport.smoothing.epsilon = parse_double(sm.at("epsilon"), "smoothing epsilon");
          transport.smoothing.eval_draws = sm.at("eval_draws").get<int>();
        }
      } else {
        throw FormatError("model document: unknown transport mode '" + mode + "'");
      }
      model.transports.push_back(std::move(transport));
    }

    if (doc.contains("diagnostics")) {
      const json& diag = doc["diagnostics"];
      model.diagnostics.objective = parse_double(diag.at("objective"), "objective");
      model.diagnostics.optimality_gap = parse_double(diag.at("optimality_gap"), "optimality_gap");
      model.diagnostics.support_sizes = diag.at("support_sizes").get<std::vector<int>>();
      for (const auto& node : diag.at("margins")) {
        model.diagnostics.margins.push_back(
            node.is_null() ? std::numeric_limits<double>::quiet_NaN() : parse_double(node, "margin"));
      }
      model.diagnostics.disagreements = diag.at("disagreements").get<std::vector<int>>();
      model.diagnostics.assumes_calibrated_scores =
          diag.at("assumes_calibrated_scores").get<bool>();
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("model document: malformed: ") + e.what());
  }

  // Structural validation.
  if (model.k < 2 || model.m < 1) {
    throw FormatError("model document: k must be >= 2 and m >= 1");
  }
  if (static_cast<int>(model.group_names.size()) != model.m ||
      static_cast<int>(model.weights.size()) != model.m ||
      static_cast<int>(model.transports.size()) != model.m) {
    throw FormatError("model document: group-indexed fields must have length m");
  }
  if (model.q.dim() != model.k) {
    throw FormatError("model document: q must have length k");
  }
  for (const auto& transport : model.transports) {
    if (transport.kind == TransportKind::kLookup) {
      if (transport.lookup.support.size() != transport.lookup.kernel.size()) {
        throw FormatError("model document: kernel support and rows differ in length");
      }
      for (const auto& atom : transport.lookup.support) {
        if (atom.dim() != model.k) {
          throw FormatError("model document: kernel support atom has wrong dimension");
        }
      }
      for (const auto& row : transport.lookup.kernel) {
        if (static_cast<int>(row.size()) != model.k) {
          throw FormatError("model document: kernel row has wrong dimension");
        }
      }
    } else {
      if (transport.nn.dim() != model.k) {
        throw FormatError("model document: psi length does not match k");
      }
      if (transport.kind == TransportKind::kSmooth && !(transport.smoothing.epsilon > 0.0)) {
        throw FormatError("model document: smoothing epsilon must be positive");
      }
    }
  }
  return model;
}

void save_model(const PostProcessorModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("save_model: cannot open '" + path + "' for writing");
  }
  out << model_to_json(model) << '\n';
  if (!out) {
    throw DataError("save_model: write to '" + path + "' failed");
  }
}

PostProcessorModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("load_model: cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

}  // namespace fairpost
