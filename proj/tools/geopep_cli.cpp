// geopep: peptide binding-site pipeline CLI.
//
// Subcommands: ingest | train | predict | evaluate | gradcheck | report.
// Every value is resolved default < config file < flag, and each run writes
// its fully resolved config next to its outputs. Exit codes: 0 success,
// 1 usage error, 2 data error, 3 numerical failure.

#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "geopep/dataset.hpp"
#include "geopep/metrics.hpp"
#include "geopep/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace geopep;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------------- files

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << content;
}

std::string fnv1a_hex(const std::string& data) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
    return buf;
}

// ------------------------------------------------------------- run config

/// Command-scoped key/value store with provenance. Defaults are registered
/// up front; a config file (key=value lines, '#' comments) and then CLI
/// flags override them. Unknown config keys are usage errors.
class RunConfig {
  public:
    void add(const std::string& key, const std::string& def) { entries_[key] = {def, "default"}; }

    void load_file(const fs::path& path) {
        std::istringstream in(read_file(path));
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            auto strip = [](std::string s) {
                size_t a = s.find_first_not_of(" \t\r");
                if (a == std::string::npos) return std::string();
                size_t b = s.find_last_not_of(" \t\r");
                return s.substr(a, b - a + 1);
            };
            line = strip(line);
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw UsageError(path.string() + ":" + std::to_string(lineno) +
                                 ": expected key=value");
            std::string key = strip(line.substr(0, eq));
            auto it = entries_.find(key);
            if (it == entries_.end())
                throw UsageError(path.string() + ":" + std::to_string(lineno) +
                                 ": unknown config key '" + key + "'");
            it->second = {strip(line.substr(eq + 1)), "config"};
        }
    }

    void set_flag(const std::string& key, const std::string& value) {
        entries_.at(key) = {value, "flag"};
    }

    const std::string& str(const std::string& key) const { return entries_.at(key).value; }

    double num(const std::string& key) const {
        try {
            size_t pos = 0;
            double v = std::stod(str(key), &pos);
            if (pos != str(key).size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw UsageError("config key '" + key + "': expected a number, got '" + str(key) +
                             "'");
        }
    }

    long integer(const std::string& key) const {
        try {
            size_t pos = 0;
            long v = std::stol(str(key), &pos);
            if (pos != str(key).size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw UsageError("config key '" + key + "': expected an integer, got '" + str(key) +
                             "'");
        }
    }

    std::string resolved() const {
        std::ostringstream out;
        for (const auto& [key, entry] : entries_)
            out << key << "=" << entry.value << "  (" << entry.source << ")\n";
        return out.str();
    }

    json resolved_json() const {
        json j = json::object();
        for (const auto& [key, entry] : entries_)
            j[key] = {{"value", entry.value}, {"source", entry.source}};
        return j;
    }

  private:
    struct Entry {
        std::string value;
        std::string source;
    };
    std::map<std::string, Entry> entries_;
};

/// Wires --config plus one flag per registered key onto a CLI11 subcommand
/// and resolves provenance after parsing.
class ConfigBinder {
  public:
    ConfigBinder(CLI::App* cmd, RunConfig& cfg) : cmd_(cmd), cfg_(cfg) {
        cmd->add_option("--config", config_path_, "key=value config file");
    }

    void bind(const std::string& key, const std::string& def, const std::string& help) {
        cfg_.add(key, def);
        values_[key] = def;
        cmd_->add_option("--" + key, values_[key], help);
    }

    void resolve() {
        if (!config_path_.empty()) cfg_.load_file(config_path_);
        for (auto& [key, value] : values_)
            if (cmd_->count("--" + key) > 0) cfg_.set_flag(key, value);
    }

  private:
    CLI::App* cmd_;
    RunConfig& cfg_;
    std::string config_path_;
    std::map<std::string, std::string> values_;
};

// --------------------------------------------------------------- pipeline

struct Corpus {
    std::vector<Complex> complexes;
    std::deque<LabeledPair> pairs; // stable addresses
    std::map<std::string, const LabeledPair*> by_id;
    std::map<std::string, size_t> exclusion_counts;
    size_t files_seen = 0;
    size_t files_failed = 0;
};

std::string pair_id(const LabeledPair& pair) {
    return pair.pdb_id + "_" + pair.peptide_chain + pair.protein_chain;
}

std::string row_key(const std::string& pdb_id, char pep, char prot) {
    return pdb_id + "_" + pep + prot;
}

/// Parse, filter and label every .pdb/.ent file under pdb_dir (sorted order).
Corpus load_corpus(const fs::path& pdb_dir, double cutoff) {
    if (!fs::is_directory(pdb_dir))
        throw ValidationError("pdb-dir is not a directory: " + pdb_dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(pdb_dir)) {
        auto ext = entry.path().extension().string();
        if (entry.is_regular_file() && (ext == ".pdb" || ext == ".ent"))
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    Corpus corpus;
    corpus.files_seen = files.size();
    for (const auto& path : files) {
        try {
            corpus.complexes.push_back(parse_pdb(read_file(path), path.stem().string()));
        } catch (const std::exception& e) {
            std::cerr << "warning: skipping " << path.string() << ": " << e.what() << "\n";
            corpus.files_failed++;
        }
    }
    if (corpus.files_seen == 0) throw ValidationError("no .pdb files in " + pdb_dir.string());
    if (corpus.complexes.empty()) throw ValidationError("every PDB file failed to parse");

    auto outcome = filter_complexes(corpus.complexes);
    corpus.exclusion_counts = outcome.exclusion_counts;
    for (const auto& cp : outcome.pairs) {
        corpus.pairs.push_back(label_interface(cp, cutoff));
        corpus.by_id[pair_id(corpus.pairs.back())] = &corpus.pairs.back();
    }
    return corpus;
}

const LabeledPair& pair_for_id(const Corpus& corpus, const std::string& id) {
    auto it = corpus.by_id.find(id);
    if (it == corpus.by_id.end())
        throw ValidationError("manifest id '" + id + "' not found in the PDB directory");
    return *it->second;
}

std::vector<TrainInstance> build_instances(const Corpus& corpus,
                                           const std::vector<std::string>& ids,
                                           FeatureScheme scheme) {
    std::vector<TrainInstance> out;
    for (const auto& id : ids) {
        TrainInstance inst;
        inst.id = id;
        inst.pair = &pair_for_id(corpus, id);
        inst.features = encode_features(*inst.pair, scheme);
        out.push_back(std::move(inst));
    }
    return out;
}

std::string labels_csv(const Corpus& corpus, const SplitManifest& manifest) {
    std::ostringstream out;
    out << "pdb_id,protein_chain,peptide_chain,res_seq,icode,label\n";
    auto emit = [&](const std::string& id) {
        const LabeledPair& pair = pair_for_id(corpus, id);
        for (size_t i = 0; i < pair.real_length(); ++i)
            out << pair.pdb_id << ',' << pair.protein_chain << ',' << pair.peptide_chain << ','
                << pair.res_seq[i] << ',' << (pair.icode[i] == ' ' ? '_' : pair.icode[i]) << ','
                << pair.labels[i] << '\n';
    };
    for (const auto& id : manifest.train_ids) emit(id);
    for (const auto& id : manifest.val_ids) emit(id);
    return out.str();
}

ModelMode parse_mode(const std::string& name) {
    if (name == "kan") return ModelMode::kan;
    if (name == "mlp") return ModelMode::mlp;
    throw UsageError("mode must be kan or mlp, got '" + name + "'");
}

std::vector<int> parse_hidden(const std::string& spec) {
    std::vector<int> out;
    std::istringstream in(spec);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        try {
            int v = std::stoi(tok);
            if (v < 1) throw std::invalid_argument("");
            out.push_back(v);
        } catch (const std::exception&) {
            throw UsageError("hidden: expected comma-separated positive integers, got '" + spec +
                             "'");
        }
    }
    if (out.empty()) throw UsageError("hidden: at least one layer width required");
    return out;
}

FeatureScheme scheme_of(const RunConfig& cfg) {
    try {
        return parse_feature_scheme(cfg.str("scheme"));
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

// ------------------------------------------------------------------ ingest

int cmd_ingest(RunConfig& cfg) {
    Corpus corpus = load_corpus(cfg.str("pdb-dir"), cfg.num("cutoff"));
    if (corpus.pairs.empty()) throw ValidationError("no chain pairs survived filtering");

    std::vector<std::string> ids;
    for (const auto& pair : corpus.pairs) ids.push_back(pair_id(pair));
    auto manifest = split_dataset(ids, (uint64_t)cfg.integer("seed"));

    fs::path out_dir = cfg.str("out");
    write_file(out_dir / "manifest.txt", manifest.serialize());
    write_file(out_dir / "labels.csv", labels_csv(corpus, manifest));
    write_file(out_dir / "config.txt", cfg.resolved());

    std::cout << "files: " << corpus.files_seen << " (" << corpus.files_failed << " failed)\n";
    std::cout << "pairs kept: " << corpus.pairs.size() << " (train " << manifest.train_ids.size()
              << ", val " << manifest.val_ids.size() << ")\n";
    for (const auto& [rule, count] : corpus.exclusion_counts)
        std::cout << "excluded by " << rule << ": " << count << "\n";
    std::cout << "wrote " << (out_dir / "manifest.txt").string() << "\n";
    return 0;
}

// ------------------------------------------------------------------- train

int cmd_train(RunConfig& cfg) {
    auto manifest = SplitManifest::parse(read_file(cfg.str("manifest")));
    Corpus corpus = load_corpus(cfg.str("pdb-dir"), cfg.num("cutoff"));
    FeatureScheme scheme = scheme_of(cfg);
    auto train_set = build_instances(corpus, manifest.train_ids, scheme);
    auto val_set = build_instances(corpus, manifest.val_ids, scheme);

    ModelConfig mc;
    mc.mode = parse_mode(cfg.str("mode"));
    mc.hidden = parse_hidden(cfg.str("hidden"));
    mc.grid_size = (int)cfg.integer("grid-size");
    mc.spline_degree = (int)cfg.integer("spline-degree");
    mc.feature_dim = train_set.empty() ? 21 : (int)train_set.front().features.dim();

    TrainConfig tc;
    tc.epochs = (int)cfg.integer("epochs");
    tc.seed = (uint64_t)cfg.integer("seed");
    tc.lr = cfg.num("lr");
    tc.lambda = cfg.num("lambda");
    tc.patience = (int)cfg.integer("patience");
    tc.mode = mc.mode;
    if (cfg.str("loss") == "ce_only") {
        tc.loss_mode = LossMode::ce_only;
        if (cfg.num("lambda") != 0.5)
            std::cerr << "warning: --loss ce_only ignores lambda\n";
    } else if (cfg.str("loss") == "composite") {
        tc.loss_mode = LossMode::composite;
    } else {
        throw UsageError("loss must be composite or ce_only");
    }

    auto result = train_model(train_set, val_set, mc, tc);

    fs::path out_dir = cfg.str("out");
    write_file(out_dir / "checkpoint.txt", result.best_checkpoint);
    write_file(out_dir / "training_log.csv", training_log_csv(result.log));
    write_file(out_dir / "config.txt", cfg.resolved());

    if (result.diverged) {
        std::cerr << "error: training diverged: " << result.divergence_info << "\n";
        return kExitNumerical;
    }
    std::cout << "mode: " << (mc.mode == ModelMode::kan ? "kan" : "mlp") << ", seed: " << tc.seed
              << "\n";
    std::cout << "best epoch " << result.best_epoch << ", val AUC " << result.best_val_auc
              << "\n";
    std::cout << "wrote " << (out_dir / "checkpoint.txt").string() << "\n";
    return 0;
}

// ----------------------------------------------------------------- predict

int cmd_predict(RunConfig& cfg) {
    KanStack model = load_checkpoint(read_file(cfg.str("checkpoint")));
    auto manifest = SplitManifest::parse(read_file(cfg.str("manifest")));
    Corpus corpus = load_corpus(cfg.str("pdb-dir"), cfg.num("cutoff"));
    FeatureScheme scheme = scheme_of(cfg);

    std::vector<std::string> ids;
    const std::string split = cfg.str("split");
    if (split == "train" || split == "all")
        ids.insert(ids.end(), manifest.train_ids.begin(), manifest.train_ids.end());
    if (split == "val" || split == "all")
        ids.insert(ids.end(), manifest.val_ids.begin(), manifest.val_ids.end());
    if (ids.empty()) throw UsageError("split must be train, val or all");

    std::vector<PredictionInstance> preds;
    for (const auto& id : ids) {
        const LabeledPair& pair = pair_for_id(corpus, id);
        auto features = encode_features(pair, scheme);
        auto probs = model.forward(features, pair.mask);
        PredictionInstance pi;
        pi.pdb_id = pair.pdb_id;
        pi.protein_chain = pair.protein_chain;
        pi.peptide_chain = pair.peptide_chain;
        for (size_t i = 0; i < pair.real_length(); ++i) {
            pi.res_seq.push_back(pair.res_seq[i]);
            pi.icode.push_back(pair.icode[i]);
            pi.labels.push_back(pair.labels[i]);
            pi.probabilities.push_back(probs[i]);
        }
        preds.push_back(std::move(pi));
    }
    write_file(cfg.str("out"), write_predictions(preds));
    std::cout << "wrote " << preds.size() << " complexes to " << cfg.str("out") << "\n";
    return 0;
}

// ---------------------------------------------------------------- evaluate

struct MethodEval {
    std::string name;
    json aggregates;
    json per_complex;
    CurvePoints roc, pr;
    std::vector<RecallBin> bins;
    bool has_curves = false;
};

std::string curve_csv(const CurvePoints& c, const char* x_name, const char* y_name) {
    std::ostringstream out;
    out << "threshold," << x_name << "," << y_name << "\n";
    char buf[96];
    for (size_t i = 0; i < c.xs.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f\n", c.thresholds[i], c.xs[i], c.ys[i]);
        out << buf;
    }
    return out.str();
}

std::string bins_csv(const std::vector<RecallBin>& bins) {
    std::ostringstream out;
    out << "ratio_lo,ratio_hi,mean_recall,count\n";
    char buf[96];
    for (const auto& b : bins) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f,%.6f,%zu\n", b.ratio_lo, b.ratio_hi,
                      b.mean_recall, b.count);
        out << buf;
    }
    return out.str();
}

std::string curve_svg(const CurvePoints& c, const std::string& title, const char* x_label,
                      const char* y_label) {
    const double w = 420, h = 420, m = 50;
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << m << "\" y1=\"" << h - m << "\" x2=\"" << w - m << "\" y2=\""
        << h - m << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << m << "\" y1=\"" << h - m << "\" x2=\"" << m << "\" y2=\"" << m
        << "\" stroke=\"black\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    char buf[64];
    for (size_t i = 0; i < c.xs.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", m + c.xs[i] * (w - 2 * m),
                      h - m - c.ys[i] * (h - 2 * m));
        out << buf;
    }
    out << "\"/>\n";
    out << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
    out << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">"
        << x_label << "</text>\n";
    out << "<text x=\"15\" y=\"" << h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
        << h / 2 << ")\">" << y_label << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

MethodEval evaluate_method(const std::string& name, const std::string& csv_text,
                           const Corpus& corpus, double threshold, int window, int sasa_points) {
    PredictionTable table = read_predictions(csv_text);

    // group rows per complex, preserving residue order
    std::map<std::string, std::vector<const PredictionRow*>> groups;
    for (const auto& row : table.rows)
        groups[row_key(row.pdb_id, row.peptide_chain, row.protein_chain)].push_back(&row);

    MethodEval eval;
    eval.name = name;
    eval.per_complex = json::array();

    std::vector<double> pooled_p;
    std::vector<int> pooled_y, pooled_mask;
    std::vector<double> tpvr_values, dist_thresholded, dist_raw;
    size_t tpvr_null = 0;
    std::vector<double> rsa_pos_means, rsa_neg_means;
    std::vector<ComplexRecallPoint> recall_points;

    for (const auto& [id, rows] : groups) {
        const LabeledPair& pair = pair_for_id(corpus, id);
        if (rows.size() != pair.real_length())
            throw ValidationError("predictions for " + id + " cover " +
                                  std::to_string(rows.size()) + " residues, expected " +
                                  std::to_string(pair.real_length()));
        std::vector<double> p(pair.real_length());
        for (size_t i = 0; i < rows.size(); ++i) {
            if (rows[i]->res_seq != pair.res_seq[i])
                throw ValidationError("predictions for " + id +
                                      " are misaligned at residue index " + std::to_string(i));
            p[i] = rows[i]->probability;
        }
        std::vector<int> y(pair.labels.begin(), pair.labels.begin() + (long)pair.real_length());
        std::vector<int> mask(pair.real_length(), 1);
        if (window > 0) y = expand_labels(y, mask, window);

        for (size_t i = 0; i < p.size(); ++i) {
            pooled_p.push_back(p[i]);
            pooled_y.push_back(y[i]);
            pooled_mask.push_back(1);
        }

        // TPVR over mass centers of predicted residues
        std::vector<Vec3> pred_pts, tp_pts;
        for (size_t i = 0; i < p.size(); ++i) {
            if (p[i] < threshold) continue;
            pred_pts.push_back(pair.mass_centers[i]);
            if (y[i]) tp_pts.push_back(pair.mass_centers[i]);
        }
        std::optional<double> tv;
        if (!pred_pts.empty()) tv = tpvr(pred_pts, tp_pts);
        if (tv) tpvr_values.push_back(*tv);
        else ++tpvr_null;

        double dl_hard = distance_loss_eval(p, y, pair.residue_atoms, mask, threshold,
                                            DistanceLossMode::thresholded);
        double dl_raw = distance_loss_eval(p, y, pair.residue_atoms, mask, threshold,
                                           DistanceLossMode::raw_probabilities);
        dist_thresholded.push_back(dl_hard);
        dist_raw.push_back(dl_raw);

        auto pt = complex_recall_point(p, y, mask, threshold);
        recall_points.push_back(pt);

        // ΔRSA of predicted positives vs the rest
        const Complex* cx = nullptr;
        for (const auto& c : corpus.complexes)
            if (c.pdb_id == pair.pdb_id) cx = &c;
        if (cx) {
            auto rsa = delta_rsa(*cx, pair.peptide_chain, pair.protein_chain, 1.4, sasa_points);
            double pos_sum = 0, neg_sum = 0;
            size_t pos_n = 0, neg_n = 0;
            for (size_t i = 0; i < p.size(); ++i) {
                if (p[i] >= threshold) {
                    pos_sum += rsa.delta_rsa[i];
                    ++pos_n;
                } else {
                    neg_sum += rsa.delta_rsa[i];
                    ++neg_n;
                }
            }
            if (pos_n && neg_n) {
                rsa_pos_means.push_back(pos_sum / (double)pos_n);
                rsa_neg_means.push_back(neg_sum / (double)neg_n);
            }
        }

        json rec;
        rec["id"] = id;
        rec["residues"] = pair.real_length();
        rec["interface_ratio"] = pt.interface_ratio;
        rec["recall"] = pt.recall;
        rec["distance_loss_thresholded"] = dl_hard;
        rec["distance_loss_raw"] = dl_raw;
        if (tv) rec["tpvr"] = *tv;
        else rec["tpvr"] = nullptr;
        eval.per_complex.push_back(rec);
    }

    if (pooled_p.empty()) throw ValidationError("prediction file " + name + " matched no complex");

    auto tm = confusion_at_threshold(pooled_p, pooled_y, pooled_mask, threshold);
    json agg;
    agg["threshold"] = threshold;
    agg["label_window"] = window;
    agg["residues"] = pooled_p.size();
    agg["precision"] = tm.precision;
    agg["recall"] = tm.recall;
    agg["f1"] = tm.f1;
    agg["accuracy"] = tm.accuracy;
    agg["confusion"] = {{"tp", tm.counts.tp}, {"fp", tm.counts.fp}, {"fn", tm.counts.fn},
                        {"tn", tm.counts.tn}};
    try {
        eval.roc = roc_curve(pooled_p, pooled_y, pooled_mask);
        eval.pr = pr_curve(pooled_p, pooled_y, pooled_mask);
        eval.has_curves = true;
        agg["auc_roc"] = eval.roc.area;
        agg["auc_pr"] = eval.pr.area;
    } catch (const ContractError&) {
        agg["auc_roc"] = nullptr;
        agg["auc_pr"] = nullptr;
    }

    auto mean_of = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / (double)v.size();
    };
    agg["tpvr_mean"] = tpvr_values.empty() ? json(nullptr) : json(mean_of(tpvr_values));
    agg["tpvr_defined"] = tpvr_values.size();
    agg["tpvr_null"] = tpvr_null;
    agg["distance_loss_thresholded_mean"] = mean_of(dist_thresholded);
    agg["distance_loss_raw_mean"] = mean_of(dist_raw);

    if (!rsa_pos_means.empty()) {
        auto stats = delta_rsa_stats(rsa_pos_means, rsa_neg_means, 2000, 0);
        agg["delta_rsa"] = {{"entries", rsa_pos_means.size()},
                            {"diff_mean", stats.diff_mean},
                            {"diff_median", stats.diff_median},
                            {"wilcoxon_w", stats.wilcoxon_w},
                            {"p_value", stats.p_value},
                            {"effect_r", stats.effect_r},
                            {"ci_mean", {stats.ci_mean.first, stats.ci_mean.second}},
                            {"ci_median", {stats.ci_median.first, stats.ci_median.second}}};
    } else {
        agg["delta_rsa"] = nullptr;
    }

    eval.bins = recall_vs_interface_ratio(recall_points);
    eval.aggregates = agg;
    return eval;
}

int cmd_evaluate(RunConfig& cfg, const std::vector<std::string>& prediction_files) {
    if (prediction_files.empty()) throw UsageError("at least one --predictions file required");
    auto manifest = SplitManifest::parse(read_file(cfg.str("manifest")));
    (void)manifest;
    Corpus corpus = load_corpus(cfg.str("pdb-dir"), cfg.num("cutoff"));
    double threshold = cfg.num("threshold");
    int window = (int)cfg.integer("window");
    int sasa_points = (int)cfg.integer("sasa-points");
    bool svg = cfg.str("svg") == "true" || cfg.str("svg") == "1";

    fs::path out_path = cfg.str("out");
    fs::path out_dir = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");

    json report;
    report["config"] = cfg.resolved_json();
    report["inputs"] = json::object();
    report["methods"] = json::object();

    std::vector<MethodEval> evals;
    for (const auto& file : prediction_files) {
        std::string text = read_file(file);
        std::string method = fs::path(file).stem().string();
        report["inputs"][method] = {{"path", file}, {"digest", fnv1a_hex(text)}};
        auto eval = evaluate_method(method, text, corpus, threshold, window, sasa_points);
        report["methods"][method] = {{"aggregates", eval.aggregates},
                                     {"per_complex", eval.per_complex}};
        if (eval.has_curves) {
            write_file(out_dir / ("roc_" + method + ".csv"), curve_csv(eval.roc, "fpr", "tpr"));
            write_file(out_dir / ("pr_" + method + ".csv"),
                       curve_csv(eval.pr, "recall", "precision"));
            if (svg) {
                write_file(out_dir / ("roc_" + method + ".svg"),
                           curve_svg(eval.roc, "ROC " + method, "FPR", "TPR"));
                write_file(out_dir / ("pr_" + method + ".svg"),
                           curve_svg(eval.pr, "PR " + method, "recall", "precision"));
            }
        }
        write_file(out_dir / ("recall_bins_" + method + ".csv"), bins_csv(eval.bins));
        evals.push_back(std::move(eval));
    }

    write_file(out_path, report.dump(2) + "\n");
    write_file(out_dir / "evaluate_config.txt", cfg.resolved());

    // side-by-side aggregate table
    std::printf("%-16s %9s %9s %9s %9s %9s %9s\n", "method", "precision", "recall", "f1",
                "auc_roc", "tpvr", "dist");
    for (const auto& eval : evals) {
        const auto& a = eval.aggregates;
        auto cell = [&](const char* key) {
            return a[key].is_null() ? std::string("n/a")
                                    : (std::ostringstream() << a[key].get<double>()).str();
        };
        std::printf("%-16s %9.4f %9.4f %9.4f %9s %9s %9.4f\n", eval.name.c_str(),
                    a["precision"].get<double>(), a["recall"].get<double>(),
                    a["f1"].get<double>(), cell("auc_roc").c_str(), cell("tpvr_mean").c_str(),
                    a["distance_loss_thresholded_mean"].get<double>());
    }
    std::cout << "wrote " << out_path.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------- gradcheck

int cmd_gradcheck(RunConfig& cfg) {
    int n_seeds = (int)cfg.integer("seeds");
    double tolerance = cfg.num("tolerance");
    double fd_step = cfg.num("fd-step");

    std::vector<ModelMode> modes;
    if (cfg.str("mode") == "both") modes = {ModelMode::kan, ModelMode::mlp};
    else modes = {parse_mode(cfg.str("mode"))};

    // small synthetic instance: 8 single-atom residues, 3 positives
    LabeledPair pair;
    pair.pdb_id = "gradcheck";
    pair.protein_seq = "LSLSLSSL";
    pair.labels.assign(kProteinPad, 0);
    pair.mask.assign(kProteinPad, 0);
    for (size_t i = 0; i < 8; ++i) {
        pair.labels[i] = (i % 3 == 0) ? 1 : 0;
        pair.mask[i] = 1;
        pair.residue_atoms.push_back({{(double)i * 3.8, 0, 0}});
        pair.mass_centers.push_back({(double)i * 3.8, 0, 0});
        pair.res_seq.push_back((int)i + 1);
        pair.icode.push_back(' ');
    }
    auto field = distance_field(pair.residue_atoms, pair.labels, pair.mask);

    ModelConfig mc;
    mc.feature_dim = 3;
    mc.hidden = {5, 4};
    mc.grid_size = 4;

    bool all_passed = true;
    double worst = 0.0;
    for (ModelMode mode : modes) {
        mc.mode = mode;
        for (int s = 1; s <= n_seeds; ++s) {
            std::mt19937_64 rng((uint64_t)s);
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            TrainInstance inst;
            inst.id = "gc" + std::to_string(s);
            inst.pair = &pair;
            inst.features.rows.assign(kProteinPad, std::vector<double>(3, 0.0));
            inst.features.global_row.assign(3, 0.0);
            for (size_t i = 0; i < 8; ++i)
                for (int d = 0; d < 3; ++d) {
                    inst.features.rows[i][(size_t)d] = u(rng);
                    inst.features.global_row[(size_t)d] += inst.features.rows[i][(size_t)d] / 8.0;
                }

            KanStack stack(mc);
            init_params(stack, (uint64_t)s);
            auto report = gradient_check(stack, inst, &field, cfg.num("lambda"), tolerance,
                                         fd_step);
            worst = std::max(worst, report.max_rel_error);
            all_passed = all_passed && report.passed;
            std::printf("%s seed %2d: max rel error %.3e %s\n",
                        mode == ModelMode::kan ? "kan" : "mlp", s, report.max_rel_error,
                        report.passed ? "ok" : "FAIL");
        }
    }
    std::printf("worst relative error: %.3e (tolerance %.1e)\n", worst, tolerance);
    if (!all_passed) {
        std::cerr << "error: gradient check failed\n";
        return kExitNumerical;
    }
    return 0;
}

// ------------------------------------------------------------------- report

int cmd_report(const std::vector<std::string>& report_files) {
    if (report_files.empty()) throw UsageError("at least one report JSON required");
    std::printf("%-16s %-16s %9s %9s %9s %9s %9s\n", "report", "method", "precision", "recall",
                "f1", "auc_roc", "dist");
    for (const auto& file : report_files) {
        json report = json::parse(read_file(file));
        std::string stem = fs::path(file).stem().string();
        for (const auto& [method, body] : report.at("methods").items()) {
            const auto& a = body.at("aggregates");
            std::printf("%-16s %-16s %9.4f %9.4f %9.4f %9s %9.4f\n", stem.c_str(),
                        method.c_str(), a.at("precision").get<double>(),
                        a.at("recall").get<double>(), a.at("f1").get<double>(),
                        a.at("auc_roc").is_null()
                            ? "n/a"
                            : (std::ostringstream() << a.at("auc_roc").get<double>()).str().c_str(),
                        a.at("distance_loss_thresholded_mean").get<double>());
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"peptide binding-site prediction pipeline"};
    app.require_subcommand(1);

    RunConfig ingest_cfg, train_cfg, predict_cfg, evaluate_cfg, gradcheck_cfg;

    auto* ingest = app.add_subcommand("ingest", "parse, filter, label and split a PDB directory");
    ConfigBinder ingest_bind(ingest, ingest_cfg);
    ingest_bind.bind("pdb-dir", "", "directory of .pdb files");
    ingest_bind.bind("out", "ingest_out", "output directory");
    ingest_bind.bind("cutoff", "6.0", "interface contact cutoff in angstroms");
    ingest_bind.bind("seed", "0", "split shuffle seed");

    auto* train = app.add_subcommand("train", "train a model on an ingested manifest");
    ConfigBinder train_bind(train, train_cfg);
    train_bind.bind("manifest", "", "split manifest from ingest");
    train_bind.bind("pdb-dir", "", "directory of .pdb files");
    train_bind.bind("out", "train_out", "output directory");
    train_bind.bind("cutoff", "6.0", "interface contact cutoff in angstroms");
    train_bind.bind("scheme", "onehot", "feature scheme: onehot | physchem");
    train_bind.bind("mode", "kan", "model mode: kan | mlp");
    train_bind.bind("hidden", "16", "comma-separated hidden layer widths");
    train_bind.bind("grid-size", "8", "spline grid size");
    train_bind.bind("spline-degree", "3", "spline degree");
    train_bind.bind("epochs", "200", "training epochs");
    train_bind.bind("lr", "0.001", "Adam learning rate");
    train_bind.bind("lambda", "0.5", "structure loss weight");
    train_bind.bind("loss", "composite", "loss mode: composite | ce_only");
    train_bind.bind("patience", "20", "early-stopping patience, 0 disables");
    train_bind.bind("seed", "0", "training seed");

    auto* predict = app.add_subcommand("predict", "write per-residue probabilities");
    ConfigBinder predict_bind(predict, predict_cfg);
    predict_bind.bind("checkpoint", "", "trained checkpoint file");
    predict_bind.bind("manifest", "", "split manifest from ingest");
    predict_bind.bind("pdb-dir", "", "directory of .pdb files");
    predict_bind.bind("out", "predictions.csv", "output CSV path");
    predict_bind.bind("cutoff", "6.0", "interface contact cutoff in angstroms");
    predict_bind.bind("scheme", "onehot", "feature scheme: onehot | physchem");
    predict_bind.bind("split", "all", "which split to score: train | val | all");

    auto* evaluate = app.add_subcommand("evaluate", "metrics report from prediction CSVs");
    std::vector<std::string> prediction_files;
    evaluate->add_option("--predictions", prediction_files, "prediction CSV (repeatable)");
    ConfigBinder evaluate_bind(evaluate, evaluate_cfg);
    evaluate_bind.bind("manifest", "", "split manifest from ingest");
    evaluate_bind.bind("pdb-dir", "", "directory of .pdb files");
    evaluate_bind.bind("out", "report.json", "report JSON path");
    evaluate_bind.bind("cutoff", "6.0", "interface contact cutoff in angstroms");
    evaluate_bind.bind("threshold", "0.8", "classification threshold");
    evaluate_bind.bind("window", "0", "label dilation window for relaxed evaluation");
    evaluate_bind.bind("sasa-points", "240", "sphere points for the SASA lattice");
    evaluate_bind.bind("svg", "false", "also render ROC/PR curves as SVG");

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient audit");
    ConfigBinder gradcheck_bind(gradcheck, gradcheck_cfg);
    gradcheck_bind.bind("mode", "both", "kan | mlp | both");
    gradcheck_bind.bind("seeds", "20", "number of random seeds");
    gradcheck_bind.bind("lambda", "0.5", "structure loss weight");
    gradcheck_bind.bind("tolerance", "1e-5", "max relative error allowed");
    gradcheck_bind.bind("fd-step", "1e-5", "finite difference step");

    auto* report = app.add_subcommand("report", "tabulate one or more evaluation reports");
    std::vector<std::string> report_files;
    report->add_option("files", report_files, "report JSON files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (ingest->parsed()) {
            ingest_bind.resolve();
            if (ingest_cfg.str("pdb-dir").empty()) throw UsageError("--pdb-dir is required");
            return cmd_ingest(ingest_cfg);
        }
        if (train->parsed()) {
            train_bind.resolve();
            if (train_cfg.str("manifest").empty() || train_cfg.str("pdb-dir").empty())
                throw UsageError("--manifest and --pdb-dir are required");
            return cmd_train(train_cfg);
        }
        if (predict->parsed()) {
            predict_bind.resolve();
            if (predict_cfg.str("checkpoint").empty() || predict_cfg.str("manifest").empty() ||
                predict_cfg.str("pdb-dir").empty())
                throw UsageError("--checkpoint, --manifest and --pdb-dir are required");
            return cmd_predict(predict_cfg);
        }
        if (evaluate->parsed()) {
            evaluate_bind.resolve();
            if (evaluate_cfg.str("manifest").empty() || evaluate_cfg.str("pdb-dir").empty())
                throw UsageError("--manifest and --pdb-dir are required");
            return cmd_evaluate(evaluate_cfg, prediction_files);
        }
        if (gradcheck->parsed()) {
            gradcheck_bind.resolve();
            return cmd_gradcheck(gradcheck_cfg);
        }
        if (report->parsed()) return cmd_report(report_files);
        throw UsageError("no subcommand");
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const json::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }
}
