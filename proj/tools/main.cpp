// mvrep: compressive neural modeling and evaluation of gridded multivariate
// data. Subcommands: train, reconstruct, eval, baseline lerp|copula, query,
// render, sweep, info.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvrep/baselines.hpp"
#include "mvrep/contour.hpp"
#include "mvrep/field.hpp"
#include "mvrep/metrics.hpp"
#include "mvrep/model.hpp"
#include "mvrep/render.hpp"
#include "mvrep/trainer.hpp"
#include "mvrep/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mvrep;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

json json_number(double v) {
    // JSON has no infinity; PSNR of identical fields serializes as "inf".
    if (std::isinf(v)) return json(v > 0 ? "inf" : "-inf");
    return json(v);
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(std::string("bad ") + what + " list: " + text);
        }
    }
    if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
    return out;
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(std::string("bad ") + what + " list: " + text);
        }
    }
    if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
    return out;
}

/// "label=path" or bare path (label = filename stem).
std::pair<std::string, fs::path> parse_candidate(const std::string& spec) {
    auto eq = spec.find('=');
    if (eq == std::string::npos) {
        fs::path p(spec);
        return {p.stem().string(), p};
    }
    std::string label = spec.substr(0, eq);
    fs::path p(spec.substr(eq + 1));
    if (label.empty()) label = p.stem().string();
    return {label, p};
}

// ---------------------------------------------------------------------------
// Run manifests: one JSON per command with config snapshot, inputs, seeds, and
// output checksums, so identical inputs are verifiable against identical
// artifacts.
// ---------------------------------------------------------------------------

class RunManifest {
public:
    RunManifest(std::string command, int argc, char** argv) {
        doc_["command"] = std::move(command);
        json args = json::array();
        for (int i = 0; i < argc; ++i) args.push_back(argv[i]);
        doc_["argv"] = args;
        doc_["outputs"] = json::object();
        doc_["inputs"] = json::object();
    }

    void set_config(json cfg) { doc_["config"] = std::move(cfg); }
    void add_input(const std::string& key, const fs::path& p) {
        doc_["inputs"][key] = p.string();
    }
    void add_seed(const std::string& key, std::uint64_t seed) {
        doc_["seeds"][key] = seed;
    }
    void add_output(const fs::path& p) {
        doc_["outputs"][p.string()] = to_hex(fnv1a64_file(p));
    }

    void write(const fs::path& path, double wall_seconds) {
        doc_["wall_seconds"] = wall_seconds;
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw DataError("cannot write run manifest: " + path.string());
        out << doc_.dump(2) << "\n";
    }

private:
    json doc_;
};

ModelConfig model_config_for(const MultiField& field, int width, int blocks,
                             double omega0, std::uint64_t seed) {
    ModelConfig cfg;
    cfg.in_dim = field.grid().dims;
    cfg.out_dim = field.variable_count();
    cfg.hidden_width = width;
    cfg.num_res_blocks = blocks;
    cfg.omega0 = static_cast<float>(omega0);
    cfg.init_seed = seed;
    return cfg;
}

json train_report_json(const TrainReport& report, const TrainConfig& tcfg) {
    json epochs = json::array();
    for (const auto& e : report.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"loss", e.mean_loss},
                          {"lr", e.lr},
                          {"seconds", e.seconds}});
    }
    return json{{"epochs", std::move(epochs)},
                {"sample_count", report.sample_count},
                {"total_points", report.total_points},
                {"total_seconds", report.total_seconds},
                {"param_checksum", to_hex(report.param_checksum)},
                {"batch_size", tcfg.batch_size},
                {"sample_fraction", tcfg.sample_fraction}};
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string data;
    std::string out;
    std::string report;
    std::string config_file;
    int width = 120;
    int blocks = 10;
    double omega0 = 30.0;
    double lr = 1e-4;
    int batch = 2048;
    int epochs = 300;
    double decay = 0.8;
    int decay_every = 15;
    double sample_frac = 1.0;
    std::uint64_t seed = 0;
    int threads = 0;
    int checkpoint_every = 0;
    std::string checkpoint_dir;
};

void load_train_config_file(const std::string& path, TrainConfig& tcfg) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open train config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError(std::string("train config parse error: ") + e.what());
    }
    if (j.contains("learning_rate")) tcfg.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("batch_size")) tcfg.batch_size = j["batch_size"].get<int>();
    if (j.contains("epochs")) tcfg.epochs = j["epochs"].get<int>();
    if (j.contains("decay_rate")) tcfg.decay_rate = j["decay_rate"].get<double>();
    if (j.contains("decay_every")) tcfg.decay_every = j["decay_every"].get<int>();
    if (j.contains("sample_fraction")) tcfg.sample_fraction = j["sample_fraction"].get<double>();
    if (j.contains("seed")) tcfg.shuffle_seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads")) tcfg.threads = j["threads"].get<int>();
}

int cmd_train(const TrainArgs& args, const CLI::App* sub, int argc, char** argv) {
    Stopwatch clock;
    RunManifest manifest("train", argc, argv);

    MultiField field = load_dataset(args.data);

    TrainConfig tcfg;
    if (!args.config_file.empty()) load_train_config_file(args.config_file, tcfg);
    auto passed = [&](const char* name) { return sub->count(name) > 0; };
    if (args.config_file.empty() || passed("--lr")) tcfg.learning_rate = args.lr;
    if (args.config_file.empty() || passed("--batch")) tcfg.batch_size = args.batch;
    if (args.config_file.empty() || passed("--epochs")) tcfg.epochs = args.epochs;
    if (args.config_file.empty() || passed("--decay")) tcfg.decay_rate = args.decay;
    if (args.config_file.empty() || passed("--decay-every")) tcfg.decay_every = args.decay_every;
    if (args.config_file.empty() || passed("--sample-frac")) tcfg.sample_fraction = args.sample_frac;
    if (args.config_file.empty() || passed("--seed")) tcfg.shuffle_seed = args.seed;
    if (args.config_file.empty() || passed("--threads")) tcfg.threads = args.threads;
    tcfg.checkpoint_every = args.checkpoint_every;
    tcfg.checkpoint_dir = args.checkpoint_dir;

    ModelConfig mcfg = model_config_for(field, args.width, args.blocks,
                                        args.omega0, tcfg.shuffle_seed);

    std::cout << "training " << field.variable_count() << " variable(s) on "
              << field.point_count() << " points, width " << mcfg.hidden_width
              << ", blocks " << mcfg.num_res_blocks << ", epochs "
              << tcfg.epochs << "\n";

    auto [model, report] = train(field, mcfg, tcfg);

    const std::size_t bytes = save_model(model, args.out);
    const double cr = compression_ratio(bytes, field);

    const fs::path report_path =
        args.report.empty() ? fs::path(args.out + ".train_report.json")
                            : fs::path(args.report);
    {
        json j = train_report_json(report, tcfg);
        j["model_bytes"] = bytes;
        j["compression_ratio"] = cr;
        std::ofstream out(report_path, std::ios::trunc);
        if (!out) throw DataError("cannot write report: " + report_path.string());
        out << j.dump(2) << "\n";
    }

    std::cout << "final loss " << fmt(report.epochs.back().mean_loss)
              << ", model " << bytes << " bytes, compression " << fmt(cr)
              << ":1\n";

    manifest.set_config({{"width", args.width},
                         {"blocks", args.blocks},
                         {"omega0", args.omega0},
                         {"lr", tcfg.learning_rate},
                         {"batch", tcfg.batch_size},
                         {"epochs", tcfg.epochs},
                         {"decay", tcfg.decay_rate},
                         {"decay_every", tcfg.decay_every},
                         {"sample_frac", tcfg.sample_fraction},
                         {"threads", tcfg.threads}});
    manifest.add_input("data", args.data);
    manifest.add_seed("seed", tcfg.shuffle_seed);
    manifest.add_output(args.out);
    manifest.add_output(report_path);
    manifest.write(fs::path(args.out).replace_extension(".run_manifest.json"),
                   clock.seconds());
    return 0;
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

int cmd_reconstruct(const std::string& model_path, const std::string& out_dir,
                    const std::string& name, int threads, int argc, char** argv) {
    Stopwatch clock;
    RunManifest manifest("reconstruct", argc, argv);

    ResidualSirenModel model = load_model(model_path);
    ParallelRunner pool(threads);

    Stopwatch inference;
    MultiField recon = reconstruct_field(model, &pool);
    const double inference_seconds = inference.seconds();

    fs::create_directories(out_dir);
    const fs::path manifest_path = save_dataset(recon, out_dir, name);

    std::cout << "reconstructed " << recon.variable_count() << " variable(s) on "
              << recon.point_count() << " points in " << fmt(inference_seconds)
              << " s\n";

    manifest.set_config({{"model", model_path},
                         {"name", name},
                         {"inference_seconds", inference_seconds}});
    manifest.add_input("model", model_path);
    manifest.add_output(manifest_path);
    {
        std::ifstream mf(manifest_path);
        json md;
        mf >> md;
        for (const auto& entry : md["variables"]) {
            manifest.add_output(manifest_path.parent_path() /
                                entry["file"].get<std::string>());
        }
    }
    manifest.write(fs::path(out_dir) / (name + ".run_manifest.json"),
                   clock.seconds());
    std::cout << "wrote " << manifest_path.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string reference;
    std::vector<std::string> candidates;
    std::vector<std::string> which = {"psnr", "stats"};
    std::string out_dir;
    int n_iso = 20;
    std::uint64_t seed = 0;
    int bins = 128;
    int slice_axis = -2;   // -2: default (last axis for 3D)
    std::int64_t slice_index = -1;
    std::string colormap = "viridis";
};

void require_compatible(const MultiField& ref, const MultiField& cand,
                        const std::string& label) {
    if (ref.grid() != cand.grid()) {
        throw DataError("candidate '" + label + "' grid does not match reference");
    }
    if (ref.variable_count() != cand.variable_count()) {
        throw DataError("candidate '" + label + "' variable count mismatch");
    }
    for (int v = 0; v < ref.variable_count(); ++v) {
        if (ref.variable(v).name != cand.variable(v).name) {
            throw DataError("candidate '" + label + "' variable order mismatch");
        }
    }
}

void pick_slice(const GridSpec& grid, int& axis, std::int64_t& index) {
    if (grid.dims == 2) {
        axis = -1;
        index = 0;
        return;
    }
    if (axis == -2) axis = grid.dims - 1;
    if (axis < 0 || axis >= grid.dims) throw UsageError("bad slice axis");
    if (index < 0) index = grid.shape[static_cast<std::size_t>(axis)] / 2;
    if (index >= grid.shape[static_cast<std::size_t>(axis)]) {
        throw UsageError("slice index out of bounds");
    }
}

int cmd_eval(const EvalArgs& args, int argc, char** argv) {
    Stopwatch clock;
    RunManifest manifest("eval", argc, argv);

    MultiField ref = load_dataset(args.reference);
    manifest.add_input("reference", args.reference);

    std::vector<std::pair<std::string, MultiField>> candidates;
    for (const auto& spec : args.candidates) {
        auto [label, path] = parse_candidate(spec);
        MultiField cand = load_dataset(path);
        require_compatible(ref, cand, label);
        manifest.add_input("candidate:" + label, path);
        candidates.emplace_back(label, std::move(cand));
    }

    bool want_all = false;
    std::map<std::string, bool> want;
    for (const auto& w : args.which) {
        if (w == "all") {
            want_all = true;
        } else if (w == "psnr" || w == "stats" || w == "grad" ||
                   w == "contours" || w == "deps" || w == "ssim") {
            want[w] = true;
        } else {
            throw UsageError("unknown eval section '" + w + "'");
        }
    }
    auto wanted = [&](const std::string& w) { return want_all || want.count(w) > 0; };

    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);
    const std::string dataset_name = fs::path(args.reference).stem().string();
    std::vector<fs::path> outputs;

    int slice_axis = args.slice_axis;
    std::int64_t slice_index = args.slice_index;
    pick_slice(ref.grid(), slice_axis, slice_index);

    std::map<std::string, json> reports;
    for (const auto& [label, cand] : candidates) reports[label] = json::object();

    if (wanted("psnr") || wanted("stats")) {
        std::map<std::string, QualityReport> quality;
        for (const auto& [label, cand] : candidates) {
            quality[label] = quality_report(ref, cand);
        }
        if (wanted("psnr")) {
            std::ofstream csv(out / "psnr.csv", std::ios::trunc);
            csv << "variable";
            for (const auto& [label, cand] : candidates) csv << "," << label;
            csv << "\n";
            for (int v = 0; v < ref.variable_count(); ++v) {
                csv << ref.variable(v).name;
                for (const auto& [label, cand] : candidates) {
                    csv << ","
                        << fmt(quality[label].per_variable[static_cast<std::size_t>(v)].psnr_db);
                }
                csv << "\n";
            }
            csv << "MEAN";
            for (const auto& [label, cand] : candidates) {
                csv << "," << fmt(quality[label].mean_psnr);
            }
            csv << "\n";
            outputs.push_back(out / "psnr.csv");
        }
        if (wanted("stats")) {
            std::ofstream csv(out / "stats.csv", std::ios::trunc);
            csv << "variable,candidate,max_abs,p95_abs,frac_above_0.05\n";
            for (const auto& [label, q] : quality) {
                for (const auto& vq : q.per_variable) {
                    csv << vq.name << "," << label << "," << fmt(vq.stats.max_abs)
                        << "," << fmt(vq.stats.p95_abs) << ","
                        << fmt(vq.stats.frac_above_tol) << "\n";
                }
                csv << "MEAN," << label << "," << fmt(q.mean_max_abs) << ","
                    << fmt(q.mean_p95_abs) << "," << fmt(q.mean_frac_above_tol)
                    << "\n";
            }
            outputs.push_back(out / "stats.csv");
        }
        for (const auto& [label, q] : quality) {
            json per = json::array();
            for (const auto& vq : q.per_variable) {
                per.push_back({{"variable", vq.name},
                               {"psnr_db", json_number(vq.psnr_db)},
                               {"max_abs", vq.stats.max_abs},
                               {"p95_abs", vq.stats.p95_abs},
                               {"frac_above_0.05", vq.stats.frac_above_tol}});
            }
            reports[label]["quality"] = {{"per_variable", std::move(per)},
                                         {"mean_psnr", json_number(q.mean_psnr)},
                                         {"mean_max_abs", q.mean_max_abs},
                                         {"mean_p95_abs", q.mean_p95_abs},
                                         {"mean_frac_above_0.05", q.mean_frac_above_tol}};
        }
    }

    if (wanted("grad")) {
        std::map<std::string, GradientReport> grads;
        for (const auto& [label, cand] : candidates) {
            grads[label] = gradient_report(ref, cand);
        }
        std::ofstream csv(out / "grad.csv", std::ios::trunc);
        csv << "variable";
        for (const auto& [label, cand] : candidates) csv << "," << label;
        csv << "\n";
        for (int v = 0; v < ref.variable_count(); ++v) {
            csv << ref.variable(v).name;
            for (const auto& [label, cand] : candidates) {
                csv << ","
                    << fmt(grads[label].per_variable[static_cast<std::size_t>(v)].second);
            }
            csv << "\n";
        }
        csv << "MEAN";
        for (const auto& [label, cand] : candidates) {
            csv << "," << fmt(grads[label].mean_psnr);
        }
        csv << "\n";
        outputs.push_back(out / "grad.csv");
        for (const auto& [label, g] : grads) {
            reports[label]["gradient_mean_psnr"] = json_number(g.mean_psnr);
        }
    }

    if (wanted("contours")) {
        std::ofstream csv(out / "contours.csv", std::ios::trunc);
        csv << "variable,candidate,mean_chamfer,mean_hausdorff,used,excluded\n";
        for (const auto& [label, cand] : candidates) {
            ContourStudyResult study = contour_study(ref, cand, args.n_iso, args.seed);
            for (const auto& pv : study.per_variable) {
                csv << pv.name << "," << label << "," << fmt(pv.mean_chamfer) << ","
                    << fmt(pv.mean_hausdorff) << "," << pv.used_isovalues << ","
                    << pv.excluded_isovalues << "\n";
            }
            csv << "AGGREGATE," << label << "," << fmt(study.mean_chamfer) << ","
                << fmt(study.mean_hausdorff) << ",," << study.total_excluded << "\n";
            reports[label]["contours"] = {{"mean_chamfer", study.mean_chamfer},
                                          {"mean_hausdorff", study.mean_hausdorff},
                                          {"excluded", study.total_excluded}};
        }
        outputs.push_back(out / "contours.csv");
    }

    if (wanted("deps")) {
        std::map<std::string, DependencyError> deps;
        double corr_vmax = 0.0, mi_vmax = 0.0;
        for (const auto& [label, cand] : candidates) {
            deps[label] = dependency_error(ref, cand, args.bins);
            for (double e : deps[label].corr_err) corr_vmax = std::max(corr_vmax, e);
            for (double e : deps[label].mi_err) mi_vmax = std::max(mi_vmax, e);
        }
        // One shared color scale across methods so equal colors mean equal
        // absolute error.
        if (corr_vmax <= 0.0) corr_vmax = 1e-12;
        if (mi_vmax <= 0.0) mi_vmax = 1e-12;
        const Colormap cmap = colormap_from_string(args.colormap);
        std::ofstream csv(out / "deps.csv", std::ios::trunc);
        csv << "candidate,mean_corr_err,mean_mi_err\n";
        for (const auto& [label, d] : deps) {
            csv << label << "," << fmt(d.mean_corr_err) << "," << fmt(d.mean_mi_err)
                << "\n";
            const int v = d.vars;
            auto dump_matrix = [&](const std::vector<double>& m, const fs::path& p) {
                std::ofstream mcsv(p, std::ios::trunc);
                for (int i = 0; i < v; ++i) {
                    for (int j = 0; j < v; ++j) {
                        mcsv << (j ? "," : "")
                             << fmt(m[static_cast<std::size_t>(i) * v + j]);
                    }
                    mcsv << "\n";
                }
                outputs.push_back(p);
            };
            dump_matrix(d.corr_err, out / ("corr_err_" + label + ".csv"));
            dump_matrix(d.mi_err, out / ("mi_err_" + label + ".csv"));
            write_ppm(render_matrix_heatmap(d.corr_err, v, v, 0.0, corr_vmax, cmap),
                      out / ("corr_err_" + label + ".ppm"));
            write_ppm(render_matrix_heatmap(d.mi_err, v, v, 0.0, mi_vmax, cmap),
                      out / ("mi_err_" + label + ".ppm"));
            outputs.push_back(out / ("corr_err_" + label + ".ppm"));
            outputs.push_back(out / ("mi_err_" + label + ".ppm"));
            reports[label]["dependency"] = {{"mean_corr_err", d.mean_corr_err},
                                            {"mean_mi_err", d.mean_mi_err},
                                            {"heatmap_vmax_corr", corr_vmax},
                                            {"heatmap_vmax_mi", mi_vmax}};
        }
        outputs.push_back(out / "deps.csv");
    }

    if (wanted("ssim")) {
        std::ofstream csv(out / "ssim.csv", std::ios::trunc);
        csv << "variable";
        for (const auto& [label, cand] : candidates) csv << "," << label;
        csv << "\n";
        std::map<std::string, double> sums;
        for (int v = 0; v < ref.variable_count(); ++v) {
            const auto& meta = ref.variable(v);
            const std::pair<double, double> range{meta.raw_min, meta.raw_max};
            Image img_ref = render_field(ref, v, slice_axis, slice_index,
                                         Colormap::Gray, range);
            const fs::path ref_img =
                out / (dataset_name + "_" + meta.name + "_reference.ppm");
            write_ppm(img_ref, ref_img);
            outputs.push_back(ref_img);
            csv << meta.name;
            for (const auto& [label, cand] : candidates) {
                Image img_cand = render_field(cand, v, slice_axis, slice_index,
                                              Colormap::Gray, range);
                const fs::path cand_img =
                    out / (dataset_name + "_" + meta.name + "_" + label + ".ppm");
                write_ppm(img_cand, cand_img);
                outputs.push_back(cand_img);
                const double s = ssim(img_ref, img_cand);
                sums[label] += s;
                csv << "," << fmt(s);
            }
            csv << "\n";
        }
        csv << "MEAN";
        for (const auto& [label, cand] : candidates) {
            const double mean = sums[label] / ref.variable_count();
            csv << "," << fmt(mean);
            reports[label]["mean_ssim"] = mean;
        }
        csv << "\n";
        outputs.push_back(out / "ssim.csv");
    }

    for (const auto& [label, body] : reports) {
        const fs::path p = out / ("eval_" + label + ".json");
        std::ofstream jf(p, std::ios::trunc);
        jf << body.dump(2) << "\n";
        outputs.push_back(p);
    }

    manifest.set_config({{"which", args.which},
                         {"n_iso", args.n_iso},
                         {"bins", args.bins},
                         {"slice_axis", slice_axis},
                         {"slice_index", slice_index}});
    manifest.add_seed("seed", args.seed);
    for (const auto& p : outputs) manifest.add_output(p);
    manifest.write(out / "eval.run_manifest.json", clock.seconds());
    std::cout << "eval reports written to " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// baseline lerp | copula
// ---------------------------------------------------------------------------

int cmd_baseline_lerp(const std::string& data, const std::string& factor_text,
                      const std::string& out_dir, const std::string& name,
                      int argc, char** argv) {
    Stopwatch clock;
    RunManifest manifest("baseline lerp", argc, argv);

    MultiField field = load_dataset(data);
    std::vector<int> factors = parse_int_list(factor_text, "factor");
    if (static_cast<int>(factors.size()) != field.grid().dims) {
        throw UsageError("--factor needs one entry per axis");
    }

    MultiField recon = lerp_reduce_expand(field, factors);
    const std::size_t storage = lerp_storage_bytes(field.grid(), factors,
                                                   field.variable_count());

    fs::create_directories(out_dir);
    const fs::path manifest_path = save_dataset(recon, out_dir, name);

    std::cout << "lerp baseline: reduced payload " << storage << " bytes ("
              << fmt(compression_ratio(storage, field)) << ":1)\n";

    manifest.set_config({{"factor", factors}, {"storage_bytes", storage}});
    manifest.add_input("data", data);
    manifest.add_output(manifest_path);
    manifest.write(fs::path(out_dir) / (name + ".run_manifest.json"),
                   clock.seconds());
    return 0;
}

int cmd_baseline_copula(const std::string& data, const std::string& block_text,
                        const std::string& out_dir, const std::string& name,
                        std::uint64_t seed, const std::string& mode_text,
                        int argc, char** argv) {
    Stopwatch clock;
    RunManifest manifest("baseline copula", argc, argv);

    MultiField field = load_dataset(data);
    std::vector<int> block = parse_int_list(block_text, "block");
    if (static_cast<int>(block.size()) != field.grid().dims) {
        throw UsageError("--block needs one entry per axis");
    }
    CopulaMode mode;
    if (mode_text == "sample") {
        mode = CopulaMode::Sample;
    } else if (mode_text == "mean") {
        mode = CopulaMode::Mean;
    } else {
        throw UsageError("--mode must be sample or mean");
    }

    CopulaSummary summary = copula_summarize(field, block);
    fs::create_directories(out_dir);
    const fs::path summary_path = fs::path(out_dir) / (name + ".mvcs");
    const std::size_t bytes = save_copula(summary, summary_path);

    int clipped = 0;
    MultiField recon = copula_reconstruct(summary, seed, mode, &clipped);
    const fs::path manifest_path = save_dataset(recon, out_dir, name);

    std::cout << "copula baseline: " << summary.block_count() << " blocks, "
              << bytes << " bytes (" << fmt(compression_ratio(bytes, field))
              << ":1)";
    if (clipped > 0) std::cout << ", " << clipped << " block(s) clipped";
    std::cout << "\n";

    manifest.set_config({{"block", block},
                         {"mode", mode_text},
                         {"storage_bytes", bytes},
                         {"clipped_blocks", clipped}});
    manifest.add_input("data", data);
    manifest.add_seed("seed", seed);
    manifest.add_output(summary_path);
    manifest.add_output(manifest_path);
    manifest.write(fs::path(out_dir) / (name + ".run_manifest.json"),
                   clock.seconds());
    return 0;
}

// ---------------------------------------------------------------------------
// query
// ---------------------------------------------------------------------------

int cmd_query(const std::string& reference,
              const std::vector<std::string>& candidate_specs,
              const std::string& predicate_text, const std::string& out_dir,
              int slice_axis, std::int64_t slice_index, int argc, char** argv) {
    Stopwatch clock;
    RunManifest manifest("query", argc, argv);

    QueryPredicate predicate;
    try {
        predicate = QueryPredicate::parse(predicate_text);
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }

    MultiField ref = load_dataset(reference);
    manifest.add_input("reference", reference);
    pick_slice(ref.grid(), slice_axis, slice_index);

    const auto ref_mask = qdv(ref, predicate);
    const auto ref_count =
        static_cast<std::int64_t>(std::count(ref_mask.begin(), ref_mask.end(), 1));
    if (ref_count == 0) {
        std::cerr << "warning: predicate selects no reference points\n";
    }

    fs::create_directories(out_dir);
    const fs::path out(out_dir);
    std::vector<fs::path> outputs;

    write_ppm(render_mask_slice(ref.grid(), ref_mask, slice_axis, slice_index),
              out / "mask_reference.ppm");
    outputs.push_back(out / "mask_reference.ppm");

    std::ofstream csv(out / "qdv.csv", std::ios::trunc);
    csv << "candidate,dice,selected,reference_selected\n";
    json results = json::array();
    for (const auto& spec : candidate_specs) {
        auto [label, path] = parse_candidate(spec);
        MultiField cand = load_dataset(path);
        require_compatible(ref, cand, label);
        manifest.add_input("candidate:" + label, path);
        const auto mask = qdv(cand, predicate);
        const double d = dice(ref_mask, mask);
        const auto count =
            static_cast<std::int64_t>(std::count(mask.begin(), mask.end(), 1));
        csv << label << "," << fmt(d) << "," << count << "," << ref_count << "\n";
        results.push_back({{"candidate", label},
                           {"dice", d},
                           {"selected", count},
                           {"reference_selected", ref_count}});
        write_ppm(render_mask_slice(cand.grid(), mask, slice_axis, slice_index),
                  out / ("mask_" + label + ".ppm"));
        outputs.push_back(out / ("mask_" + label + ".ppm"));
        std::cout << label << ": dice " << fmt(d) << "\n";
    }
    csv.close();
    outputs.push_back(out / "qdv.csv");

    {
        std::ofstream jf(out / "qdv.json", std::ios::trunc);
        jf << json{{"predicate", predicate.to_string()}, {"results", results}}.dump(2)
           << "\n";
        outputs.push_back(out / "qdv.json");
    }

    manifest.set_config({{"predicate", predicate.to_string()},
                         {"slice_axis", slice_axis},
                         {"slice_index", slice_index}});
    for (const auto& p : outputs) manifest.add_output(p);
    manifest.write(out / "qdv.run_manifest.json", clock.seconds());
    return 0;
}

// ---------------------------------------------------------------------------
// render
// ---------------------------------------------------------------------------

int cmd_render(const std::string& data, const std::string& var,
               const std::string& out, int slice_axis, std::int64_t slice_index,
               const std::string& colormap, const std::string& range_text,
               int argc, char** argv) {
    Stopwatch clock;
    RunManifest manifest("render", argc, argv);

    MultiField field = load_dataset(data);
    const int vi = field.variable_index(var);
    pick_slice(field.grid(), slice_axis, slice_index);

    std::optional<std::pair<double, double>> range;
    if (!range_text.empty()) {
        auto vals = parse_double_list(range_text, "range");
        if (vals.size() != 2 || !(vals[0] < vals[1])) {
            throw UsageError("--range needs lo,hi with lo < hi");
        }
        range = std::pair<double, double>{vals[0], vals[1]};
    }

    Image img = render_field(field, vi, slice_axis, slice_index,
                             colormap_from_string(colormap), range);
    write_ppm(img, out);
    std::cout << "wrote " << out << " (" << img.width << "x" << img.height << ")\n";

    manifest.set_config({{"var", var},
                         {"slice_axis", slice_axis},
                         {"slice_index", slice_index},
                         {"colormap", colormap}});
    manifest.add_input("data", data);
    manifest.add_output(out);
    manifest.write(fs::path(out).replace_extension(".run_manifest.json"),
                   clock.seconds());
    return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepArgs {
    std::string data;
    std::string sweep;
    std::string out_dir;
    int width = 120;
    int blocks = 10;
    double omega0 = 30.0;
    double lr = 1e-4;
    int batch = 2048;
    int epochs = 300;
    double decay = 0.8;
    int decay_every = 15;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string blocks_list = "4,6,8,10,12,14";
    std::string fractions = "0.25,0.5,0.75,1.0";
    std::string counts;  // empty: spread over 25/50/75/100% of v
    int parallel = 0;
};

MultiField prefix_variables(const MultiField& field, int k) {
    std::vector<std::string> names;
    std::vector<std::vector<float>> data;
    for (int v = 0; v < k; ++v) {
        names.push_back(field.variable(v).name);
        auto values = field.values(v);
        data.emplace_back(values.begin(), values.end());
    }
    return MultiField(field.grid(), std::move(names), std::move(data));
}

int cmd_sweep(const SweepArgs& args, int argc, char** argv) {
    Stopwatch clock;
    RunManifest manifest("sweep", argc, argv);

    MultiField field = load_dataset(args.data);
    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);

    struct Point {
        std::string label;
        double value = 0.0;
    };
    std::vector<Point> points;
    if (args.sweep == "blocks") {
        for (int b : parse_int_list(args.blocks_list, "blocks")) {
            points.push_back({"blocks=" + std::to_string(b), static_cast<double>(b)});
        }
    } else if (args.sweep == "sample-frac") {
        for (double f : parse_double_list(args.fractions, "fractions")) {
            points.push_back({"frac=" + fmt(f), f});
        }
    } else if (args.sweep == "variables") {
        std::vector<int> counts;
        if (!args.counts.empty()) {
            counts = parse_int_list(args.counts, "counts");
        } else {
            const int v = field.variable_count();
            for (int q = 1; q <= 4; ++q) {
                const int k = std::max(1, (v * q + 3) / 4);
                if (counts.empty() || counts.back() != k) counts.push_back(k);
            }
        }
        for (int k : counts) {
            if (k < 1 || k > field.variable_count()) {
                throw UsageError("variable count " + std::to_string(k) +
                                 " out of range");
            }
            points.push_back({"vars=" + std::to_string(k), static_cast<double>(k)});
        }
    } else {
        throw UsageError("--sweep must be blocks, sample-frac, or variables");
    }

    struct Row {
        std::string label;
        double value = 0.0;
        bool ok = false;
        std::string error;
        std::int64_t params = 0;
        std::size_t bytes = 0;
        double cr = 0.0;
        double mean_psnr = 0.0;
        double final_loss = 0.0;
    };
    std::vector<Row> rows(points.size());

    auto run_point = [&](std::size_t i, int point_threads) {
        const auto& point = points[i];
        Row& row = rows[i];
        row.label = point.label;
        row.value = point.value;
        try {
            const MultiField* data = &field;
            std::optional<MultiField> subset;
            TrainConfig tcfg;
            tcfg.learning_rate = args.lr;
            tcfg.batch_size = args.batch;
            tcfg.epochs = args.epochs;
            tcfg.decay_rate = args.decay;
            tcfg.decay_every = args.decay_every;
            tcfg.shuffle_seed = args.seed;  // shared seeds across points
            tcfg.threads = point_threads;
            int blocks = args.blocks;
            if (args.sweep == "blocks") {
                blocks = static_cast<int>(point.value);
            } else if (args.sweep == "sample-frac") {
                tcfg.sample_fraction = point.value;
            } else {
                subset = prefix_variables(field, static_cast<int>(point.value));
                data = &*subset;
            }
            ModelConfig mcfg = model_config_for(*data, args.width, blocks,
                                                args.omega0, args.seed);
            auto [model, report] = train(*data, mcfg, tcfg);
            const fs::path model_path =
                out / ("model_" + std::to_string(i) + ".mvnf");
            row.bytes = save_model(model, model_path);
            row.params = mcfg.param_count();
            row.cr = compression_ratio(row.bytes, *data);
            ParallelRunner pool(point_threads);
            MultiField recon = reconstruct_field(model, &pool);
            row.mean_psnr = quality_report(*data, recon).mean_psnr;
            row.final_loss = report.epochs.back().mean_loss;
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
    };

    if (args.parallel > 1) {
        std::size_t next = 0;
        while (next < points.size()) {
            std::vector<std::thread> group;
            for (int t = 0; t < args.parallel && next < points.size(); ++t, ++next) {
                group.emplace_back(run_point, next, 1);
            }
            for (auto& th : group) th.join();
        }
    } else {
        for (std::size_t i = 0; i < points.size(); ++i) run_point(i, args.threads);
    }

    const fs::path csv_path = out / ("sweep_" + args.sweep + ".csv");
    {
        std::ofstream csv(csv_path, std::ios::trunc);
        csv << "point,value,param_count,storage_bytes,compression_ratio,"
               "mean_psnr,final_loss,error\n";
        for (const auto& row : rows) {
            csv << row.label << "," << fmt(row.value) << ",";
            if (row.ok) {
                csv << row.params << "," << row.bytes << "," << fmt(row.cr) << ","
                    << fmt(row.mean_psnr) << "," << fmt(row.final_loss) << ",";
            } else {
                csv << ",,,,," << row.error;
            }
            csv << "\n";
            std::cout << row.label << ": "
                      << (row.ok ? ("mean PSNR " + fmt(row.mean_psnr) + " dB, " +
                                    std::to_string(row.bytes) + " bytes")
                                 : ("FAILED: " + row.error))
                      << "\n";
        }
    }

    manifest.set_config({{"sweep", args.sweep},
                         {"width", args.width},
                         {"epochs", args.epochs},
                         {"lr", args.lr},
                         {"batch", args.batch}});
    manifest.add_input("data", args.data);
    manifest.add_seed("seed", args.seed);
    manifest.add_output(csv_path);
    manifest.write(out / ("sweep_" + args.sweep + ".run_manifest.json"),
                   clock.seconds());
    return 0;
}

// ---------------------------------------------------------------------------
// info
// ---------------------------------------------------------------------------

int cmd_info(const std::string& data, const std::string& model_path) {
    std::optional<MultiField> field;
    if (!data.empty()) {
        field = load_dataset(data);
        std::cout << "dataset: " << data << "\n  grid:";
        for (auto s : field->grid().shape) std::cout << " " << s;
        std::cout << " (" << field->point_count() << " points)\n  variables:\n";
        for (const auto& v : field->variables()) {
            std::cout << "    " << v.name << " range [" << fmt(v.raw_min) << ", "
                      << fmt(v.raw_max) << "]"
                      << (v.degenerate() ? " (constant)" : "") << "\n";
        }
        std::cout << "  raw bytes: "
                  << field->point_count() * field->variable_count() * 4 << "\n";
    }
    if (!model_path.empty()) {
        ResidualSirenModel model = load_model(model_path);
        const auto& cfg = model.config();
        const auto bytes = fs::file_size(model_path);
        std::cout << "model: " << model_path << "\n  in_dim " << cfg.in_dim
                  << ", out_dim " << cfg.out_dim << ", width " << cfg.hidden_width
                  << ", blocks " << cfg.num_res_blocks << ", omega0 "
                  << fmt(cfg.omega0) << "\n  parameters: " << cfg.param_count()
                  << "\n  file bytes: " << bytes << "\n  grid:";
        for (auto s : model.normalizer().shape) std::cout << " " << s;
        std::cout << "\n  variables:";
        for (const auto& v : model.normalizer().variables) std::cout << " " << v.name;
        std::cout << "\n";
        if (field) {
            std::cout << "  compression ratio vs dataset: "
                      << fmt(compression_ratio(bytes, *field)) << ":1\n";
        }
    }
    if (data.empty() && model_path.empty()) {
        throw UsageError("info needs --data and/or --model");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"compressive neural representation of multivariate gridded data"};
    app.require_subcommand(1);

    // train
    TrainArgs targs;
    auto* train_cmd = app.add_subcommand("train", "fit a model to a dataset");
    train_cmd->add_option("--data", targs.data, "dataset manifest")->required();
    train_cmd->add_option("--out", targs.out, "output model file")->required();
    train_cmd->add_option("--report", targs.report, "training report path");
    train_cmd->add_option("--config", targs.config_file, "train config JSON");
    train_cmd->add_option("--width", targs.width)->check(CLI::PositiveNumber);
    train_cmd->add_option("--blocks", targs.blocks)->check(CLI::PositiveNumber);
    train_cmd->add_option("--omega0", targs.omega0)->check(CLI::PositiveNumber);
    train_cmd->add_option("--lr", targs.lr)->check(CLI::PositiveNumber);
    train_cmd->add_option("--batch", targs.batch)->check(CLI::PositiveNumber);
    train_cmd->add_option("--epochs", targs.epochs)->check(CLI::PositiveNumber);
    train_cmd->add_option("--decay", targs.decay)->check(CLI::PositiveNumber);
    train_cmd->add_option("--decay-every", targs.decay_every)
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--sample-frac", targs.sample_frac)
        ->check(CLI::Range(1e-9, 1.0));
    train_cmd->add_option("--seed", targs.seed);
    train_cmd->add_option("--threads", targs.threads);
    train_cmd->add_option("--checkpoint-every", targs.checkpoint_every)
        ->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--checkpoint-dir", targs.checkpoint_dir);

    // reconstruct
    std::string r_model, r_out, r_name = "recon";
    int r_threads = 0;
    auto* recon_cmd =
        app.add_subcommand("reconstruct", "evaluate a model on its full grid");
    recon_cmd->add_option("--model", r_model)->required();
    recon_cmd->add_option("--out", r_out, "output directory")->required();
    recon_cmd->add_option("--name", r_name, "dataset name");
    recon_cmd->add_option("--threads", r_threads);

    // eval
    EvalArgs eargs;
    auto* eval_cmd = app.add_subcommand("eval", "compare candidates to a reference");
    eval_cmd->add_option("--reference", eargs.reference)->required();
    eval_cmd->add_option("--candidate", eargs.candidates, "label=manifest")
        ->required()
        ->take_all();
    eval_cmd->add_option("--which", eargs.which,
                         "psnr|stats|grad|contours|deps|ssim|all");
    eval_cmd->add_option("--out", eargs.out_dir)->required();
    eval_cmd->add_option("--n-iso", eargs.n_iso)->check(CLI::PositiveNumber);
    eval_cmd->add_option("--seed", eargs.seed);
    eval_cmd->add_option("--bins", eargs.bins)->check(CLI::PositiveNumber);
    eval_cmd->add_option("--slice-axis", eargs.slice_axis);
    eval_cmd->add_option("--slice-index", eargs.slice_index);
    eval_cmd->add_option("--colormap", eargs.colormap);

    // baseline
    auto* baseline_cmd = app.add_subcommand("baseline", "reference reduction methods");
    baseline_cmd->require_subcommand(1);
    std::string bl_data, bl_factor, bl_out, bl_name = "lerp";
    auto* lerp_cmd = baseline_cmd->add_subcommand(
        "lerp", "linear-interpolation downsample + upsample");
    lerp_cmd->add_option("--data", bl_data)->required();
    lerp_cmd->add_option("--factor", bl_factor, "fx,fy[,fz]")->required();
    lerp_cmd->add_option("--out", bl_out)->required();
    lerp_cmd->add_option("--name", bl_name);

    std::string cp_data, cp_block, cp_out, cp_name = "copula", cp_mode = "sample";
    std::uint64_t cp_seed = 0;
    auto* copula_cmd = baseline_cmd->add_subcommand(
        "copula", "block-wise Gaussian summary + reconstruction");
    copula_cmd->add_option("--data", cp_data)->required();
    copula_cmd->add_option("--block", cp_block, "bx,by[,bz]")->required();
    copula_cmd->add_option("--out", cp_out)->required();
    copula_cmd->add_option("--name", cp_name);
    copula_cmd->add_option("--seed", cp_seed);
    copula_cmd->add_option("--mode", cp_mode, "sample|mean");

    // query
    std::string q_ref, q_pred, q_out;
    std::vector<std::string> q_cands;
    int q_axis = -2;
    std::int64_t q_index = -1;
    auto* query_cmd = app.add_subcommand("query", "multivariate range query + dice");
    query_cmd->add_option("--reference", q_ref)->required();
    query_cmd->add_option("--candidate", q_cands, "label=manifest")
        ->required()
        ->take_all();
    query_cmd->add_option("--predicate", q_pred, "VAR > a & VAR < b [& ...]")
        ->required();
    query_cmd->add_option("--out", q_out)->required();
    query_cmd->add_option("--slice-axis", q_axis);
    query_cmd->add_option("--slice-index", q_index);

    // render
    std::string rd_data, rd_var, rd_out, rd_cmap = "viridis", rd_range;
    int rd_axis = -2;
    std::int64_t rd_index = -1;
    auto* render_cmd = app.add_subcommand("render", "write a colormapped slice");
    render_cmd->add_option("--data", rd_data)->required();
    render_cmd->add_option("--var", rd_var)->required();
    render_cmd->add_option("--out", rd_out)->required();
    render_cmd->add_option("--slice-axis", rd_axis);
    render_cmd->add_option("--slice-index", rd_index);
    render_cmd->add_option("--colormap", rd_cmap);
    render_cmd->add_option("--range", rd_range, "lo,hi");

    // sweep
    SweepArgs sargs;
    auto* sweep_cmd = app.add_subcommand("sweep", "parameter studies");
    sweep_cmd->add_option("--data", sargs.data)->required();
    sweep_cmd->add_option("--sweep", sargs.sweep, "blocks|sample-frac|variables")
        ->required();
    sweep_cmd->add_option("--out", sargs.out_dir)->required();
    sweep_cmd->add_option("--width", sargs.width)->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--blocks", sargs.blocks)->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--omega0", sargs.omega0)->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--lr", sargs.lr)->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--batch", sargs.batch)->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--epochs", sargs.epochs)->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--decay", sargs.decay)->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--decay-every", sargs.decay_every)
        ->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--seed", sargs.seed);
    sweep_cmd->add_option("--threads", sargs.threads);
    sweep_cmd->add_option("--blocks-list", sargs.blocks_list);
    sweep_cmd->add_option("--fractions", sargs.fractions);
    sweep_cmd->add_option("--counts", sargs.counts);
    sweep_cmd->add_option("--parallel", sargs.parallel)
        ->check(CLI::NonNegativeNumber);

    // info
    std::string i_data, i_model;
    auto* info_cmd = app.add_subcommand("info", "describe a dataset or model");
    info_cmd->add_option("--data", i_data);
    info_cmd->add_option("--model", i_model);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(targs, train_cmd, argc, argv);
        if (recon_cmd->parsed()) {
            return cmd_reconstruct(r_model, r_out, r_name, r_threads, argc, argv);
        }
        if (eval_cmd->parsed()) return cmd_eval(eargs, argc, argv);
        if (baseline_cmd->parsed()) {
            if (lerp_cmd->parsed()) {
                return cmd_baseline_lerp(bl_data, bl_factor, bl_out, bl_name, argc,
                                         argv);
            }
            return cmd_baseline_copula(cp_data, cp_block, cp_out, cp_name, cp_seed,
                                       cp_mode, argc, argv);
        }
        if (query_cmd->parsed()) {
            return cmd_query(q_ref, q_cands, q_pred, q_out, q_axis, q_index, argc,
                             argv);
        }
        if (render_cmd->parsed()) {
            return cmd_render(rd_data, rd_var, rd_out, rd_axis, rd_index, rd_cmap,
                              rd_range, argc, argv);
        }
        if (sweep_cmd->parsed()) return cmd_sweep(sargs, argc, argv);
        if (info_cmd->parsed()) return cmd_info(i_data, i_model);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
