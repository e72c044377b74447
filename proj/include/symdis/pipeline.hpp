// Batch pipeline shared by the CLI and the integration tests: run
// configuration, shape manifests, the training loop, inference, MRF
// refinement, evaluation reports and colored-mesh export.
#pragma once

#include "symdis/analysis.hpp"
#include "symdis/field_io.hpp"
#include "symdis/losses.hpp"
#include "symdis/mesh_io.hpp"
#include "symdis/model.hpp"
#include "symdis/optimizer.hpp"
#include "symdis/refine.hpp"
#include "symdis/synthetic.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace symdis {

struct RunConfig {
  // paths
  std::string manifest;
  std::string checkpoint;
  std::string out_dir = ".";
  // model + losses
  int d = 16;
  LossWeights weights;             // lambda_1, lambda_2, lambda_3, lambda_4
  int consistency_samples = 512;   // cap on the consistency-loss sample size
  // optimizer
  double lr = 1e-4;
  double lr_end = 0.0;             // > 0: geometric decay from lr to lr_end
  double lr_skew_scale = 1.0;      // extra rate for the orthonormal generator
  int steps = 2000;
  std::uint64_t seed = 1;
  int checkpoint_every = 0;        // 0 = final checkpoint only
  // refinement
  double omega = 1.0;
  // matching
  std::string match_base = "agno";   // "raw" or "agno"
  bool match_append_chi = true;      // concatenate the chirality channel
  double alpha = 1.0;                // scale of the appended channel
  bool use_refined_chi = false;      // append refined labels mapped to {-1,+1}
  // synthetic generation
  int gen_count = 20;
  int gen_resolution = 22;
  double gen_sigma = 0.01;
};

// ---- flat key=value config files, '#' comments, flags override ----

inline void apply_config_entry(RunConfig& cfg, const std::string& key,
                               const std::string& value) {
  auto as_double = [&] {
    try {
      return std::stod(value);
    } catch (const std::exception&) {
      throw ValidationError("config: bad numeric value '" + value + "' for " + key);
    }
  };
  auto as_int = [&] { return int(as_double()); };
  auto as_bool = [&] {
    if (value == "1" || value == "true") return true;
    if (value == "0" || value == "false") return false;
    throw ValidationError("config: bad boolean '" + value + "' for " + key);
  };
  if (key == "manifest") cfg.manifest = value;
  else if (key == "checkpoint") cfg.checkpoint = value;
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "d") cfg.d = as_int();
  else if (key == "lambda_sim") cfg.weights.sim = as_double();
  else if (key == "lambda_rec") cfg.weights.rec = as_double();
  else if (key == "lambda_bou") cfg.weights.bou = as_double();
  else if (key == "lambda_con") cfg.weights.con = as_double();
  else if (key == "consistency_samples") cfg.consistency_samples = as_int();
  else if (key == "lr") cfg.lr = as_double();
  else if (key == "lr_end") cfg.lr_end = as_double();
  else if (key == "lr_skew_scale") cfg.lr_skew_scale = as_double();
  else if (key == "steps") cfg.steps = as_int();
  else if (key == "seed") cfg.seed = std::uint64_t(std::stoull(value));
  else if (key == "checkpoint_every") cfg.checkpoint_every = as_int();
  else if (key == "omega") cfg.omega = as_double();
  else if (key == "match_base") {
    require(value == "raw" || value == "agno", "config: match_base must be raw or agno");
    cfg.match_base = value;
  } else if (key == "match_append_chi") cfg.match_append_chi = as_bool();
  else if (key == "alpha") cfg.alpha = as_double();
  else if (key == "use_refined_chi") cfg.use_refined_chi = as_bool();
  else if (key == "gen_count") cfg.gen_count = as_int();
  else if (key == "gen_resolution") cfg.gen_resolution = as_int();
  else if (key == "gen_sigma") cfg.gen_sigma = as_double();
  else throw ValidationError("config: unknown key '" + key + "'");
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config '" + path + "' line " + std::to_string(lineno) +
                            ": expected key=value");
    auto trim = [](std::string s) {
      size_t b = s.find_first_not_of(" \t\r");
      size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

// ---- manifests: one shape per line, "<mesh> <descriptors> <annotations>",
// paths relative to the manifest location ----

struct ShapeEntry {
  std::string mesh_path;
  std::string descriptor_path;
  std::string annotation_path;  // may be empty ("-")
};

inline std::vector<ShapeEntry> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path + "'");
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<ShapeEntry> entries;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    ShapeEntry e;
    if (!(ss >> e.mesh_path)) continue;
    if (!(ss >> e.descriptor_path))
      throw ValidationError("manifest '" + path + "' line " + std::to_string(lineno) +
                            ": expected '<mesh> <descriptors> [annotations]'");
    if (!(ss >> e.annotation_path)) e.annotation_path = "-";
    auto resolve = [&](std::string& p) {
      if (p != "-" && !p.empty() && std::filesystem::path(p).is_relative())
        p = (base / p).string();
    };
    resolve(e.mesh_path);
    resolve(e.descriptor_path);
    resolve(e.annotation_path);
    entries.push_back(std::move(e));
  }
  require(!entries.empty(), "manifest '" + path + "' lists no shapes");
  return entries;
}

// Fully loaded shape with the per-mesh caches training needs.
struct ShapeData {
  TriMesh mesh;
  DescriptorField field;  // row-normalized
  GroundTruth gt;         // empty vectors when no annotation file
  ad::TupleTable tuples;
  Mat input_stack;        // [F, F̄], |V| x 2d
  bool has_annotations = false;
};

inline ShapeData load_shape(const ShapeEntry& entry, int expected_d) {
  ShapeData s;
  s.mesh = load_mesh(entry.mesh_path);
  DescriptorField raw = load_descriptors(entry.descriptor_path);
  require(raw.dim() == expected_d,
          "'" + entry.descriptor_path + "': descriptor dimension " +
              std::to_string(raw.dim()) + " does not match configured d=" +
              std::to_string(expected_d));
  require(raw.vertex_count() == s.mesh.vertex_count(),
          "'" + entry.descriptor_path + "': " + std::to_string(raw.vertex_count()) +
              " descriptor rows vs " + std::to_string(s.mesh.vertex_count()) +
              " mesh vertices");
  s.field = normalize(raw);
  if (entry.annotation_path != "-" && !entry.annotation_path.empty()) {
    s.gt = load_annotations(entry.annotation_path);
    require(int(s.gt.sym_map.size()) == s.mesh.vertex_count(),
            "'" + entry.annotation_path + "': " + std::to_string(s.gt.sym_map.size()) +
                " annotation lines vs " + std::to_string(s.mesh.vertex_count()) +
                " vertices");
    for (int t : s.gt.sym_map)
      require(t < s.mesh.vertex_count(), "'" + entry.annotation_path +
                                             "': sym index out of range");
    s.has_annotations = true;
  }
  s.tuples = build_tuple_table(s.mesh);
  const int d = s.field.dim();
  s.input_stack = Mat(s.field.values.rows(), 2 * d);
  s.input_stack.leftCols(d) = s.field.values;
  s.input_stack.rightCols(d) = s.field.flipped;
  return s;
}

// ---- training ----

struct StepLog {
  int step = 0;
  double dis = 0, sim = 0, rec = 0, bou = 0, con = 0, total = 0;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string step_log_header() {
  return "step,loss_dis,loss_sim,loss_rec,loss_bou,loss_con,total";
}

inline std::string to_csv(const StepLog& l) {
  return std::to_string(l.step) + "," + format_double(l.dis) + "," +
         format_double(l.sim) + "," + format_double(l.rec) + "," +
         format_double(l.bou) + "," + format_double(l.con) + "," +
         format_double(l.total);
}

// One optimizer step on one shape: record the forward pass and all five
// losses, backpropagate, apply the adaptive-moment update.
inline StepLog train_step(ModelParams& params, AdamState& opt, const ShapeData& shape,
                          const LossWeights& weights, int consistency_samples,
                          std::uint64_t sample_seed, double lr_skew_scale = 1.0) {
  ad::Tape t;
  ParamVars pv = register_params(t, params);
  BranchVars f = forward_branch(t, pv, shape.field.values);
  BranchVars g = forward_branch(t, pv, shape.field.flipped);

  ad::Var dis = loss_dis(t, f.chi, g.chi);
  ad::Var sim = loss_sim(t, f.agno, g.agno);
  ad::Var rec = loss_rec(t, t.constant(shape.input_stack), t.concat_cols(f.recon, g.recon));
  ad::Var bou = loss_bou(t, shape.tuples, f.chi, g.chi);
  const int n = shape.mesh.vertex_count();
  int m = std::min(n, std::max(2, consistency_samples));
  Rng sampler(sample_seed);
  std::vector<int> sample = sampler.sample_without_replacement(n, m);
  ad::Var con = loss_con(t, f.chi, f.agno, g.chi, g.agno, sample);
  ad::Var total = loss_total(t, dis, sim, rec, bou, con, weights);

  t.backward(total);
  opt.begin_step();
  std::vector<ad::Var> vars;
  pv.for_each([&](const std::string&, ad::Var v) { vars.push_back(v); });
  size_t idx = 0;
  params.for_each([&](const std::string& name, Mat& value) {
    double scale = name == "skew_gen" ? lr_skew_scale : 1.0;
    opt.update(name, value, t.grad(vars[idx++]), scale);
  });

  StepLog log;
  log.dis = t.value(dis)(0, 0);
  log.sim = t.value(sim)(0, 0);
  log.rec = t.value(rec)(0, 0);
  log.bou = t.value(bou)(0, 0);
  log.con = t.value(con)(0, 0);
  log.total = t.value(total)(0, 0);
  return log;
}

using StepObserver = std::function<void(const ModelParams&, const StepLog&)>;

// Round-robin over the corpus, one shape per optimizer step. With lr_end
// set, the learning rate decays geometrically from lr to lr_end.
inline std::vector<StepLog> train(ModelParams& params, const std::vector<ShapeData>& shapes,
                                  const RunConfig& cfg, const StepObserver& observer = {}) {
  require(!shapes.empty(), "train: no shapes");
  validate_weights(cfg.weights);
  require(cfg.steps >= 0, "train: negative step count");
  require(cfg.lr > 0, "train: lr must be > 0");
  require(cfg.lr_end >= 0, "train: lr_end must be >= 0");
  require(cfg.lr_skew_scale > 0, "train: lr_skew_scale must be > 0");
  AdamState opt(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  std::vector<StepLog> logs;
  logs.reserve(size_t(cfg.steps));
  for (int step = 0; step < cfg.steps; ++step) {
    if (cfg.lr_end > 0.0 && cfg.steps > 1)
      opt.set_lr(cfg.lr * std::pow(cfg.lr_end / cfg.lr, double(step) / double(cfg.steps - 1)));
    const ShapeData& shape = shapes[size_t(step) % shapes.size()];
    StepLog log = train_step(params, opt, shape, cfg.weights, cfg.consistency_samples,
                             Rng::mix(cfg.seed, 0xC0FFEE + std::uint64_t(step)),
                             cfg.lr_skew_scale);
    log.step = step;
    logs.push_back(log);
    if (observer) observer(params, log);
  }
  return logs;
}

// ---- inference outputs ----

struct InferenceOutput {
  std::vector<double> chi;
  Mat agno;
};

inline InferenceOutput infer(const ModelParams& params, const ShapeData& shape) {
  ForwardResult fr = forward(params, shape.field);
  InferenceOutput out;
  out.chi.assign(fr.features.chi.data(), fr.features.chi.data() + fr.features.chi.rows());
  out.agno = fr.features.agno;
  return out;
}

// ---- evaluation ----

struct EvalOptions {
  bool left_right = true;
  bool components = true;
  bool detection = true;
  bool matching = true;
};

struct EvalReport {
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> notes;

  void add(const std::string& key, double value) { metrics.emplace_back(key, value); }

  std::string to_kv_text() const {
    std::string out;
    for (const auto& [k, v] : metrics) out += k + "=" + format_double(v) + "\n";
    for (size_t i = 0; i < notes.size(); ++i)
      out += "note." + std::to_string(i) + "=" + notes[i] + "\n";
    return out;
  }

  std::string to_json() const {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : metrics) j["metrics"][k] = v;
    j["notes"] = notes;
    return j.dump(2) + "\n";
  }
};

// Runs the requested task procedures over every annotated shape.
inline EvalReport evaluate(const ModelParams& params, const std::vector<ShapeData>& shapes,
                           const RunConfig& cfg, const EvalOptions& opts = {}) {
  EvalReport report;
  std::vector<LrShape> lr_raw, lr_refined;
  std::vector<int> comp_cluster, comp_refined;
  double err_ours_sum = 0, err_raw_sum = 0;
  int detect_count = 0;
  double err_match_sum = 0;
  int match_count = 0;
  int evaluated = 0, skipped = 0;

  std::vector<InferenceOutput> features(shapes.size());
  std::vector<std::vector<std::uint8_t>> refined(shapes.size());
  for (size_t i = 0; i < shapes.size(); ++i) {
    features[i] = infer(params, shapes[i]);
    refined[i] = solve_mrf(build_instance(features[i].chi, shapes[i].mesh, cfg.omega)).labels;
  }

  for (size_t i = 0; i < shapes.size(); ++i) {
    const ShapeData& shape = shapes[i];
    if (!shape.has_annotations) {
      ++skipped;
      report.notes.push_back("shape " + std::to_string(i) + ": skipped (no annotations)");
      continue;
    }
    ++evaluated;
    const InferenceOutput& feat = features[i];

    if (opts.left_right) {
      lr_raw.push_back({signs_of_chi(feat.chi), shape.gt.lr_labels});
      lr_refined.push_back({signs_of_labels(refined[i]), shape.gt.lr_labels});
    }

    std::vector<int> cluster;
    bool clustered = false;
    try {
      cluster = cluster_two(feat.chi);
      clustered = true;
    } catch (const ValidationError&) {
      report.notes.push_back("shape " + std::to_string(i) +
                             ": degenerate chirality field, clustering skipped");
    }

    if (opts.components && clustered) {
      comp_cluster.push_back(connected_components(shape.mesh, cluster));
      std::vector<int> rl(refined[i].begin(), refined[i].end());
      comp_refined.push_back(connected_components(shape.mesh, rl));
    }

    if (opts.detection && clustered) {
      try {
        VertexMap ours = detect_symmetry(cluster, feat.agno);
        VertexMap raw = detect_symmetry(cluster, shape.field.values);
        err_ours_sum += err_intrinsic(ours, shape.gt, shape.mesh);
        err_raw_sum += err_intrinsic(raw, shape.gt, shape.mesh);
        ++detect_count;
      } catch (const ValidationError& e) {
        report.notes.push_back("shape " + std::to_string(i) + ": detection skipped (" +
                               e.what() + ")");
      }
    }
  }

  if (opts.matching && shapes.size() >= 2) {
    for (size_t i = 0; i + 1 < shapes.size(); ++i) {
      const ShapeData& src = shapes[i];
      const ShapeData& dst = shapes[i + 1];
      if (!src.has_annotations || !src.gt.has_corr()) continue;
      if (src.mesh.vertex_count() != dst.mesh.vertex_count()) {
        report.notes.push_back("pair " + std::to_string(i) + "->" + std::to_string(i + 1) +
                               ": matching skipped (correspondence assumes a shared grid)");
        continue;
      }
      auto features_for = [&](size_t k) {
        const ShapeData& s = shapes[k];
        Mat base = cfg.match_base == "raw" ? s.field.values : features[k].agno;
        std::vector<double> chi = cfg.use_refined_chi ? chi_from_labels(refined[k])
                                                      : features[k].chi;
        return assemble_match_features(base, cfg.match_append_chi ? &chi : nullptr,
                                       cfg.alpha);
      };
      try {
        VertexMap map = match_shapes(features_for(i), features_for(i + 1));
        err_match_sum += err_matching(map, src.gt.corr, dst.mesh);
        ++match_count;
      } catch (const ValidationError& e) {
        report.notes.push_back("pair " + std::to_string(i) + "->" + std::to_string(i + 1) +
                               ": matching skipped (" + e.what() + ")");
      }
    }
  }

  report.add("shapes", double(shapes.size()));
  report.add("shapes_evaluated", double(evaluated));
  report.add("shapes_skipped", double(skipped));
  if (!lr_raw.empty()) {
    report.add("acc_lr", acc_left_right(lr_raw));
    report.add("acc_lr_refined", acc_left_right(lr_refined));
  }
  if (!comp_cluster.empty()) {
    report.add("avg_components_cluster", avg_components(comp_cluster));
    report.add("avg_components_refined", avg_components(comp_refined));
  }
  if (detect_count > 0) {
    report.add("err_intrinsic_disentangled", err_ours_sum / detect_count);
    report.add("err_intrinsic_raw_baseline", err_raw_sum / detect_count);
    report.add("detection_shapes", double(detect_count));
  }
  if (match_count > 0) {
    report.add("err_matching", err_match_sum / match_count);
    report.add("matching_pairs", double(match_count));
  }
  return report;
}

// ---- colored export ----

// Two-color diverging ramp (blue -> white -> red). The scalar field is
// min-max normalized first; constant fields land on the low endpoint, binary
// labels on the two endpoints.
inline VertexColor diverging_color(double t) {
  auto lerp = [](double a, double b, double u) { return a + (b - a) * u; };
  double r, g, b;
  if (t < 0.5) {
    double u = 2.0 * t;
    r = lerp(59, 255, u);
    g = lerp(76, 255, u);
    b = lerp(192, 255, u);
  } else {
    double u = 2.0 * t - 1.0;
    r = lerp(255, 180, u);
    g = lerp(255, 4, u);
    b = lerp(255, 38, u);
  }
  return {std::uint8_t(r + 0.5), std::uint8_t(g + 0.5), std::uint8_t(b + 0.5)};
}

inline std::vector<VertexColor> colors_from_field(const std::vector<double>& field) {
  require(!field.empty(), "export: empty field");
  double lo = field[0], hi = field[0];
  for (double v : field) {
    require(std::isfinite(v), "export: non-finite field value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<VertexColor> colors(field.size());
  for (size_t v = 0; v < field.size(); ++v) {
    double t = hi > lo ? (field[v] - lo) / (hi - lo) : 0.0;
    colors[v] = diverging_color(t);
  }
  return colors;
}

// ---- synthetic corpus files ----

// Writes shape_###.{ply,sdf1,ann} plus manifest.txt; returns the manifest
// path. Deterministic bytes per seed.
inline std::string generate_corpus_files(const RunConfig& cfg) {
  require(cfg.gen_count >= 1, "gen: count must be >= 1");
  std::filesystem::create_directories(cfg.out_dir);
  SyntheticContext ctx = make_synthetic_context(cfg.seed, cfg.d);
  std::string manifest_path = (std::filesystem::path(cfg.out_dir) / "manifest.txt").string();
  std::ofstream manifest(manifest_path);
  if (!manifest) throw IoError("cannot write '" + manifest_path + "'");
  manifest << "# <mesh> <descriptors> <annotations>\n";
  char name[64];
  for (int k = 0; k < cfg.gen_count; ++k) {
    SyntheticShape shape = generate_corpus_shape(ctx, Rng::mix(cfg.seed, 100 + std::uint64_t(k)),
                                                 cfg.gen_resolution, cfg.gen_sigma);
    std::snprintf(name, sizeof name, "shape_%03d", k);
    std::string base = (std::filesystem::path(cfg.out_dir) / name).string();
    save_ply(base + ".ply", shape.mesh);
    save_descriptors(base + ".sdf1", shape.field);
    save_annotations(base + ".ann", shape.gt);
    manifest << name << ".ply " << name << ".sdf1 " << name << ".ann\n";
  }
  manifest.close();
  if (!manifest) throw IoError("write failed on '" + manifest_path + "'");
  return manifest_path;
}

}  // namespace symdis
