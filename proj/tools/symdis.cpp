// Command-line front end for the symmetry disentanglement pipeline.
//
// Subcommands: gen-synthetic, train, infer, refine, eval, match,
// export-colors. Every option mirrors a config-file key; values given on
// the command line win over the config file.
//
// Exit codes: 0 ok, 1 validation failure, 2 I/O failure, 3 internal error.

#include "symdis/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace symdis;

struct CommonArgs {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) load_config_file(cfg, config_path);
    for (const auto& [key, value] : overrides) apply_config_entry(cfg, key, value);
    return cfg;
  }
};

// Registers an option that funnels into the config-key override list, so
// the same validation applies to flags and config files.
void add_config_option(CLI::App* cmd, CommonArgs& args, const std::string& flag,
                       const std::string& key, const std::string& help) {
  cmd->add_option_function<std::string>(
      flag, [&args, key](const std::string& v) { args.overrides.emplace_back(key, v); },
      help);
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "flat key=value config file");
  add_config_option(cmd, args, "--seed", "seed", "RNG seed");
  add_config_option(cmd, args, "--d", "d", "descriptor dimension");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

std::vector<ShapeData> load_shapes(const RunConfig& cfg) {
  require(!cfg.manifest.empty(), "missing --manifest");
  std::vector<ShapeData> shapes;
  for (const ShapeEntry& e : load_manifest(cfg.manifest))
    shapes.push_back(load_shape(e, cfg.d));
  return shapes;
}

int cmd_gen_synthetic(const CommonArgs& args) {
  RunConfig cfg = args.resolve();
  std::string manifest = generate_corpus_files(cfg);
  std::cout << "wrote " << cfg.gen_count << " shapes, manifest " << manifest << "\n";
  return 0;
}

int cmd_train(const CommonArgs& args) {
  RunConfig cfg = args.resolve();
  require(!cfg.checkpoint.empty(), "missing --checkpoint output path");
  std::vector<ShapeData> shapes = load_shapes(cfg);
  ModelParams params = init_params(cfg.d, cfg.seed);
  std::filesystem::create_directories(cfg.out_dir);
  std::string log_path = (std::filesystem::path(cfg.out_dir) / "loss_log.csv").string();
  std::ofstream log = open_out(log_path);
  log << step_log_header() << "\n";
  StepObserver observer = [&](const ModelParams& p, const StepLog& l) {
    log << to_csv(l) << "\n";
    if (cfg.checkpoint_every > 0 && (l.step + 1) % cfg.checkpoint_every == 0)
      save_checkpoint(cfg.checkpoint, p);
  };
  train(params, shapes, cfg, observer);
  save_checkpoint(cfg.checkpoint, params);
  log.close();
  if (!log) throw IoError("write failed on '" + log_path + "'");
  std::cout << "trained " << cfg.steps << " steps on " << shapes.size()
            << " shapes; checkpoint " << cfg.checkpoint << ", log " << log_path << "\n";
  return 0;
}

int cmd_infer(const CommonArgs& args, const std::string& descriptors,
              const std::string& out_prefix) {
  RunConfig cfg = args.resolve();
  require(!cfg.checkpoint.empty(), "missing --checkpoint");
  ModelParams params = load_checkpoint(cfg.checkpoint);
  DescriptorField field = normalize(load_descriptors(descriptors));
  require(field.dim() == params.d,
          "'" + descriptors + "': descriptor dimension " + std::to_string(field.dim()) +
              " does not match checkpoint d=" + std::to_string(params.d));
  ForwardResult fr = forward(params, field);
  std::vector<double> chi(fr.features.chi.data(),
                          fr.features.chi.data() + fr.features.chi.rows());
  save_chi(out_prefix + ".chi", chi);
  save_matrix(out_prefix + ".agno", fr.features.agno);
  std::cout << "wrote " << out_prefix << ".chi and " << out_prefix << ".agno ("
            << field.vertex_count() << " vertices)\n";
  return 0;
}

int cmd_refine(const CommonArgs& args, const std::string& chi_path,
               const std::string& mesh_path, const std::string& out_prefix) {
  RunConfig cfg = args.resolve();
  std::vector<double> chi = load_chi(chi_path);
  TriMesh mesh = load_mesh(mesh_path);
  require(int(chi.size()) == mesh.vertex_count(),
          "chi length " + std::to_string(chi.size()) + " vs " +
              std::to_string(mesh.vertex_count()) + " mesh vertices");
  MrfInstance inst = build_instance(chi, mesh, cfg.omega);
  BinaryLabeling sol = solve_mrf(inst);
  save_labels(out_prefix + ".labels", sol.labels);
  std::vector<int> as_int(sol.labels.begin(), sol.labels.end());
  std::ofstream report = open_out(out_prefix + ".report");
  report << "vertices=" << chi.size() << "\n"
         << "omega=" << format_double(cfg.omega) << "\n"
         << "energy=" << format_double(sol.energy) << "\n"
         << "components=" << connected_components(mesh, as_int) << "\n";
  std::cout << "refined " << chi.size() << " vertices, energy "
            << format_double(sol.energy) << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& out_prefix, bool no_matching,
             bool no_detection) {
  RunConfig cfg = args.resolve();
  require(!cfg.checkpoint.empty(), "missing --checkpoint");
  ModelParams params = load_checkpoint(cfg.checkpoint);
  cfg.d = params.d;  // shapes must match the trained model
  std::vector<ShapeData> shapes = load_shapes(cfg);
  EvalOptions opts;
  opts.matching = !no_matching;
  opts.detection = !no_detection;
  EvalReport report = evaluate(params, shapes, cfg, opts);
  open_out(out_prefix + ".txt") << report.to_kv_text();
  open_out(out_prefix + ".json") << report.to_json();
  std::cout << report.to_kv_text();
  return 0;
}

int cmd_match(const CommonArgs& args, const std::string& desc_a, const std::string& desc_b,
              const std::string& mesh_a, const std::string& mesh_b,
              const std::string& ann_a, const std::string& out_path) {
  RunConfig cfg = args.resolve();
  auto features_for = [&](const std::string& desc_path, const std::string& mesh_path) {
    DescriptorField field = normalize(load_descriptors(desc_path));
    if (cfg.checkpoint.empty()) {
      require(cfg.match_base == "raw" && !cfg.match_append_chi,
              "matching with disentangled features requires --checkpoint "
              "(use --match-base raw --append-chi 0 for raw matching)");
      return Mat(field.values);
    }
    ModelParams params = load_checkpoint(cfg.checkpoint);
    require(field.dim() == params.d, "'" + desc_path + "': dimension mismatch vs checkpoint");
    ForwardResult fr = forward(params, field);
    std::vector<double> chi(fr.features.chi.data(),
                            fr.features.chi.data() + fr.features.chi.rows());
    if (cfg.use_refined_chi) {
      TriMesh mesh = load_mesh(mesh_path);
      require(mesh.vertex_count() == field.vertex_count(),
              "'" + mesh_path + "': vertex count does not match descriptors");
      chi = chi_from_labels(solve_mrf(build_instance(chi, mesh, cfg.omega)).labels);
    }
    Mat base = cfg.match_base == "raw" ? field.values : fr.features.agno;
    return assemble_match_features(base, cfg.match_append_chi ? &chi : nullptr, cfg.alpha);
  };
  Mat fa = features_for(desc_a, mesh_a);
  Mat fb = features_for(desc_b, mesh_b);
  VertexMap map = match_shapes(fa, fb);
  std::ofstream out = open_out(out_path);
  for (int t : map) out << t << "\n";
  std::cout << "matched " << map.size() << " vertices -> " << out_path << "\n";
  if (!ann_a.empty()) {
    GroundTruth gt = load_annotations(ann_a);
    require(gt.has_corr(), "'" + ann_a + "': no correspondence column");
    TriMesh target = load_mesh(mesh_b);
    double err = err_matching(map, gt.corr, target);
    std::cout << "err_matching=" << format_double(err) << "\n";
  }
  return 0;
}

int cmd_export_colors(const std::string& mesh_path, const std::string& field_path,
                      const std::string& labels_path, const std::string& out_path) {
  TriMesh mesh = load_mesh(mesh_path);
  std::vector<double> field;
  if (!labels_path.empty()) {
    std::vector<std::uint8_t> labels = load_labels(labels_path);
    field.assign(labels.begin(), labels.end());
  } else {
    require(!field_path.empty(), "need --field or --labels");
    field = load_chi(field_path);
  }
  require(int(field.size()) == mesh.vertex_count(),
          "field length " + std::to_string(field.size()) + " vs " +
              std::to_string(mesh.vertex_count()) + " mesh vertices");
  std::vector<VertexColor> colors = colors_from_field(field);
  save_ply(out_path, mesh, &colors);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symmetry-aware shape descriptor disentanglement pipeline"};
  app.require_subcommand(1);

  CommonArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen-synthetic", "generate a synthetic bilateral corpus");
  add_common(gen, gen_args);
  add_config_option(gen, gen_args, "--count", "gen_count", "number of shapes");
  add_config_option(gen, gen_args, "--resolution", "gen_resolution", "half-surface grid resolution");
  add_config_option(gen, gen_args, "--sigma", "gen_sigma", "descriptor noise scale");
  add_config_option(gen, gen_args, "--out-dir", "out_dir", "output directory");

  CommonArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "train the disentangler on a corpus");
  add_common(train_cmd, train_args);
  add_config_option(train_cmd, train_args, "--manifest", "manifest", "shape manifest");
  add_config_option(train_cmd, train_args, "--checkpoint", "checkpoint", "checkpoint output path");
  add_config_option(train_cmd, train_args, "--out-dir", "out_dir", "directory for the loss log");
  add_config_option(train_cmd, train_args, "--steps", "steps", "optimizer steps");
  add_config_option(train_cmd, train_args, "--lr", "lr", "learning rate");
  add_config_option(train_cmd, train_args, "--lr-end", "lr_end",
                    "final learning rate for geometric decay (0 = constant)");
  add_config_option(train_cmd, train_args, "--lr-skew-scale", "lr_skew_scale",
                    "learning-rate multiplier for the orthonormal generator");
  add_config_option(train_cmd, train_args, "--lambda-sim", "lambda_sim", "similarity loss weight");
  add_config_option(train_cmd, train_args, "--lambda-rec", "lambda_rec", "reconstruction loss weight");
  add_config_option(train_cmd, train_args, "--lambda-bou", "lambda_bou", "boundary loss weight");
  add_config_option(train_cmd, train_args, "--lambda-con", "lambda_con", "consistency loss weight");
  add_config_option(train_cmd, train_args, "--consistency-samples", "consistency_samples",
                    "sample size cap of the consistency loss");
  add_config_option(train_cmd, train_args, "--checkpoint-every", "checkpoint_every",
                    "checkpoint cadence in steps (0 = final only)");

  CommonArgs infer_args;
  std::string infer_desc, infer_out;
  CLI::App* infer_cmd = app.add_subcommand("infer", "disentangle one shape's descriptors");
  add_common(infer_cmd, infer_args);
  add_config_option(infer_cmd, infer_args, "--checkpoint", "checkpoint", "trained checkpoint");
  infer_cmd->add_option("--descriptors", infer_desc, "SDF1 descriptor file")->required();
  infer_cmd->add_option("--out-prefix", infer_out, "output prefix")->required();

  CommonArgs refine_args;
  std::string refine_chi, refine_mesh, refine_out;
  CLI::App* refine_cmd = app.add_subcommand("refine", "MRF-refine a chirality field");
  add_common(refine_cmd, refine_args);
  add_config_option(refine_cmd, refine_args, "--omega", "omega", "Potts pairwise weight");
  refine_cmd->add_option("--chi", refine_chi, "CHI1 field file")->required();
  refine_cmd->add_option("--mesh", refine_mesh, "mesh file")->required();
  refine_cmd->add_option("--out-prefix", refine_out, "output prefix")->required();

  CommonArgs eval_args;
  std::string eval_out;
  bool eval_no_matching = false, eval_no_detection = false;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint over a corpus");
  add_common(eval_cmd, eval_args);
  add_config_option(eval_cmd, eval_args, "--manifest", "manifest", "shape manifest");
  add_config_option(eval_cmd, eval_args, "--checkpoint", "checkpoint", "trained checkpoint");
  add_config_option(eval_cmd, eval_args, "--omega", "omega", "Potts pairwise weight");
  add_config_option(eval_cmd, eval_args, "--match-base", "match_base", "matching base features (raw|agno)");
  add_config_option(eval_cmd, eval_args, "--alpha", "alpha", "appended chirality channel scale");
  eval_cmd->add_option("--out-prefix", eval_out, "report output prefix")->required();
  eval_cmd->add_flag("--no-matching", eval_no_matching, "skip the matching task");
  eval_cmd->add_flag("--no-detection", eval_no_detection, "skip symmetry detection");

  CommonArgs match_args;
  std::string match_desc_a, match_desc_b, match_mesh_a, match_mesh_b, match_ann_a, match_out;
  CLI::App* match_cmd = app.add_subcommand("match", "match two shapes by descriptor similarity");
  add_common(match_cmd, match_args);
  add_config_option(match_cmd, match_args, "--checkpoint", "checkpoint", "trained checkpoint");
  add_config_option(match_cmd, match_args, "--match-base", "match_base", "base features (raw|agno)");
  add_config_option(match_cmd, match_args, "--append-chi", "match_append_chi",
                    "append the chirality channel (0/1)");
  add_config_option(match_cmd, match_args, "--alpha", "alpha", "appended channel scale");
  add_config_option(match_cmd, match_args, "--use-refined-chi", "use_refined_chi",
                    "append MRF-refined labels instead of raw chi (0/1)");
  add_config_option(match_cmd, match_args, "--omega", "omega", "Potts weight for refinement");
  match_cmd->add_option("--desc-a", match_desc_a, "source SDF1 file")->required();
  match_cmd->add_option("--desc-b", match_desc_b, "target SDF1 file")->required();
  match_cmd->add_option("--mesh-a", match_mesh_a, "source mesh (for refined chi)");
  match_cmd->add_option("--mesh-b", match_mesh_b, "target mesh (for refined chi / error)");
  match_cmd->add_option("--ann-a", match_ann_a, "source annotations with correspondence column");
  match_cmd->add_option("--out", match_out, "output map file")->required();

  std::string exp_mesh, exp_field, exp_labels, exp_out;
  CLI::App* export_cmd = app.add_subcommand("export-colors", "write a color-coded PLY");
  export_cmd->add_option("--mesh", exp_mesh, "mesh file")->required();
  export_cmd->add_option("--field", exp_field, "CHI1 scalar field");
  export_cmd->add_option("--labels", exp_labels, "binary labels file");
  export_cmd->add_option("--out", exp_out, "output PLY")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_synthetic(gen_args);
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (infer_cmd->parsed()) return cmd_infer(infer_args, infer_desc, infer_out);
    if (refine_cmd->parsed()) return cmd_refine(refine_args, refine_chi, refine_mesh, refine_out);
    if (eval_cmd->parsed())
      return cmd_eval(eval_args, eval_out, eval_no_matching, eval_no_detection);
    if (match_cmd->parsed())
      return cmd_match(match_args, match_desc_a, match_desc_b, match_mesh_a, match_mesh_b,
                       match_ann_a, match_out);
    if (export_cmd->parsed()) return cmd_export_colors(exp_mesh, exp_field, exp_labels, exp_out);
  } catch (const symdis::ValidationError& e) {
    std::cerr << "error[validation]: " << e.what() << "\n";
    return 1;
  } catch (const symdis::IoError& e) {
    std::cerr << "error[io]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
