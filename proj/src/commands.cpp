#include "hybrideval/commands.hpp"

#include "hybrideval/clusterqual.hpp"
#include "hybrideval/error.hpp"
#include "hybrideval/interchange.hpp"
#include "hybrideval/report.hpp"
#include "hybrideval/util.hpp"

#include <json.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace hybrideval {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.exit_code();
    }
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

std::string method_name(Method m) { return m == Method::Tsne ? "tsne" : "umap"; }

std::vector<Method> expand(Method m) {
    if (m == Method::Both) return {Method::Tsne, Method::Umap};
    return {m};
}

std::string composition(const TreatmentConfig& cfg, const TreatmentPlan& plan) {
    std::string s;
    if (cfg.treatment == Treatment::H0) return with_thousands(cfg.real_per_class) + " (real)";
    if (cfg.treatment != Treatment::H1) s = with_thousands(plan.real_trainval_per_class) + " (real) + ";
    s += with_thousands(plan.synth_per_class) + " (synthetic)";
    if (plan.unknown_total > 0) s += " + " + with_thousands(plan.unknown_total) + " (unknown)";
    return s;
}

std::vector<TreatmentManifest> build_manifests(const fs::path& pool_root, const std::vector<Treatment>& treatments,
                                               std::uint64_t seed, std::size_t real_per_class, const fs::path& out_root,
                                               std::ostream& out) {
    const Pools pools = load_pools(pool_root);
    std::vector<TreatmentManifest> built;
    for (Treatment t : treatments) {
        const auto cfg = default_config(t, seed, real_per_class);
        auto m = build_treatment(cfg, pools.real, pools.synthetic, pools.distractor);
        if (const auto v = validate_manifest(m); !v.empty()) {
            throw Error(ErrorKind::Data, "manifest " + std::string(to_string(t)) + " violates " + v.front().rule);
        }
        write_file_atomic(out_root / "manifests" / (std::string(to_string(t)) + ".json"), manifest_to_json(m));
        built.push_back(std::move(m));
    }

    out << std::left << std::setw(10) << "treatment" << std::setw(40) << "images per class" << std::right
        << std::setw(8) << "train" << std::setw(8) << "val" << std::setw(8) << "test" << '\n';
    for (const auto& m : built) {
        const auto plan = plan_treatment(m.config);
        out << std::left << std::setw(10) << to_string(m.config.treatment) << std::setw(40)
            << composition(m.config, plan) << std::right << std::setw(8) << with_thousands(plan.per_class.train)
            << std::setw(8) << with_thousands(plan.per_class.val) << std::setw(8) << with_thousands(plan.per_class.test)
            << '\n';
    }
    std::string shared;
    for (const auto& m : built) {
        out << to_string(m.config.treatment) << " checksum " << m.checksum << '\n';
        const auto tc = test_split_checksum(m);
        if (shared.empty()) shared = tc;
        if (tc != shared) throw Error(ErrorKind::Data, "test splits differ across treatments");
    }
    out << "test split checksum " << shared << " (shared by " << built.size() << " treatments)\n";
    return built;
}

json scores_to_json(const std::string& treatment, const std::vector<ClusterScore>& scores) {
    json arr = json::array();
    for (const auto& s : scores) {
        arr.push_back({{"method", s.method}, {"space", s.space}, {"silhouette", s.silhouette}, {"dbi", s.dbi}});
    }
    return json{{"treatment", treatment}, {"scores", std::move(arr)}};
}

std::vector<ClusterScore> scores_from_json(const json& doc) {
    std::vector<ClusterScore> out;
    const auto treatment = doc.at("treatment").get<std::string>();
    for (const auto& s : doc.at("scores")) {
        out.push_back({treatment, s.at("method").get<std::string>(), s.at("space").get<std::string>(),
                       s.at("silhouette").get<double>(), s.at("dbi").get<double>()});
    }
    return out;
}

}  // namespace

std::string with_thousands(std::size_t value) {
    std::string digits = std::to_string(value);
    for (int i = static_cast<int>(digits.size()) - 3; i > 0; i -= 3) digits.insert(static_cast<std::size_t>(i), ",");
    return digits;
}

std::string expand_trainer_command(const std::string& tmpl, const fs::path& manifest, const fs::path& out_dir,
                                   std::uint64_t seed, const std::string& treatment) {
    const std::pair<std::string, std::string> subs[] = {
        {"{manifest}", shell_quote(manifest.string())},
        {"{out}", shell_quote(out_dir.string())},
        {"{seed}", std::to_string(seed)},
        {"{treatment}", shell_quote(treatment)},
    };
    std::string cmd = tmpl;
    for (const auto& [key, value] : subs) {
        for (auto pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key, pos + value.size())) {
            cmd.replace(pos, key.size(), value);
        }
    }
    return cmd;
}

int cmd_manifest(const ManifestOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (opts.treatments.empty()) {
            err << "error: no treatments selected\n";
            return kExitUsage;
        }
        build_manifests(opts.pools, opts.treatments, opts.seed, opts.real_per_class, opts.out, out);
        return 0;
    });
}

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto preds = read_predictions(opts.predictions);
        const auto cm = confusion_matrix(preds.records, preds.class_names.size(), preds.class_names);
        const auto summary = summarize(opts.treatment, cm);

        json per_class = json::array();
        for (std::size_t c = 0; c < summary.per_class.size(); ++c) {
            const auto& m = summary.per_class[c];
            per_class.push_back({{"class", cm.class_names[c]},
                                 {"precision", m.precision},
                                 {"recall", m.recall},
                                 {"f1", m.f1},
                                 {"support", m.support},
                                 {"undefined_ratio", static_cast<bool>(summary.undefined_ratio[c])},
                                 {"display",
                                  {{"precision", format_half_up(m.precision, 2)},
                                   {"recall", format_half_up(m.recall, 2)},
                                   {"f1", format_half_up(m.f1, 2)}}}});
        }
        json records = json::array();
        for (const auto& r : preds.records) {
            records.push_back({{"id", r.id}, {"true", cm.class_names[r.true_label]}, {"pred", cm.class_names[r.pred_label]}});
        }
        json doc{{"treatment", opts.treatment},
                 {"class_names", cm.class_names},
                 {"confusion", cm.counts},
                 {"per_class", std::move(per_class)},
                 {"weighted_f1", summary.weighted_f1},
                 {"accuracy", summary.accuracy},
                 {"display",
                  {{"weighted_f1", format_half_up(summary.weighted_f1, 2)},
                   {"accuracy", format_half_up(summary.accuracy, 2)}}},
                 {"records", std::move(records)}};
        const auto path = opts.out / "eval" / opts.treatment / "metrics.json";
        write_file_atomic(path, doc.dump(2) + "\n");
        out << opts.treatment << ": " << preds.records.size() << " records, weighted F1 "
            << format_half_up(summary.weighted_f1, 2) << ", accuracy " << format_half_up(summary.accuracy, 2) << " -> "
            << path.string() << '\n';
        return 0;
    });
}

int cmd_project(const ProjectOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        fs::path sidecar = opts.sidecar;
        if (sidecar.empty()) sidecar = fs::path(opts.embeddings).replace_extension(".json");
        const auto emb = read_embeddings(opts.embeddings, sidecar);
        check_embedding(emb);
        const auto methods = expand(opts.method);
        // Parameter feasibility is checked before any projection work starts.
        for (Method m : methods) {
            if (m == Method::Tsne) check_tsne_params(opts.tsne, emb.size());
            if (m == Method::Umap) check_umap_params(opts.umap, emb.size());
        }

        const fs::path dir = opts.out / "projection" / opts.treatment;
        std::vector<ClusterScore> scores;
        for (Method m : methods) {
            const auto name = method_name(m);
            const auto result = m == Method::Tsne ? tsne_run(emb, opts.tsne) : umap_run(emb, opts.umap);
            write_file_atomic(dir / (name + ".csv"), format_projection_csv(emb, result));
            write_file_atomic(dir / (name + ".json"), format_projection_diagnostics(name, result));
            const auto rep = cluster_report({result.coords, emb.labels});
            scores.push_back({opts.treatment, name, "2d", rep.silhouette_mean, rep.dbi});
            out << opts.treatment << " " << name << ": silhouette " << format_half_up(rep.silhouette_mean, 2) << ", DBI "
                << format_half_up(rep.dbi, 2) << ", final loss " << format_double(result.final_loss()) << '\n';
            for (const auto& w : result.warnings) err << "warning: " << name << ": " << w << '\n';
        }
        const auto raw = cluster_report({emb.vectors, emb.labels});
        scores.push_back({opts.treatment, "none", "embedding", raw.silhouette_mean, raw.dbi});
        write_file_atomic(dir / "cluster_scores.json", scores_to_json(opts.treatment, scores).dump(2) + "\n");
        return 0;
    });
}

int cmd_report(const ReportOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        std::vector<std::string> treatments = opts.treatments;
        if (treatments.empty() && fs::is_directory(opts.out / "eval")) {
            for (const auto& d : fs::directory_iterator(opts.out / "eval")) {
                if (d.is_directory()) treatments.push_back(d.path().filename().string());
            }
            std::sort(treatments.begin(), treatments.end());
        }
        if (treatments.empty()) {
            throw Error(ErrorKind::Report, "no evaluation outputs under " + (opts.out / "eval").string());
        }

        std::vector<std::string> missing;
        std::vector<json> metrics_docs, score_docs;
        for (const auto& t : treatments) {
            const auto metrics_path = opts.out / "eval" / t / "metrics.json";
            const auto scores_path = opts.out / "projection" / t / "cluster_scores.json";
            for (const auto& p : {metrics_path, scores_path}) {
                if (!fs::is_regular_file(p)) missing.push_back(p.string());
            }
            if (!fs::is_regular_file(metrics_path) || !fs::is_regular_file(scores_path)) continue;
            try {
                metrics_docs.push_back(json::parse(read_file(metrics_path)));
                score_docs.push_back(json::parse(read_file(scores_path)));
            } catch (const json::exception& e) {
                throw Error(ErrorKind::Report, "unreadable report input for " + t + ": " + e.what());
            }
            for (const auto& s : score_docs.back().at("scores")) {
                if (s.at("space") != "2d") continue;
                const auto csv = opts.out / "projection" / t / (s.at("method").get<std::string>() + ".csv");
                if (!fs::is_regular_file(csv)) missing.push_back(csv.string());
            }
        }
        if (!missing.empty()) {
            err << "error: missing report inputs:\n";
            for (const auto& m : missing) err << "  " << m << '\n';
            return static_cast<int>(ErrorKind::Report);
        }

        std::vector<TreatmentMetrics> all_metrics;
        std::vector<ClusterScore> all_scores;
        for (std::size_t k = 0; k < treatments.size(); ++k) {
            const auto& t = treatments[k];
            const auto& md = metrics_docs[k];
            const fs::path dir = opts.out / "report" / t;

            ConfusionMatrix cm;
            std::vector<EvalRecord> records;
            try {
                cm.class_names = md.at("class_names").get<std::vector<std::string>>();
                cm.counts = md.at("confusion").get<std::vector<std::vector<std::uint64_t>>>();
                for (const auto& r : md.at("records")) {
                    const auto& names = cm.class_names;
                    auto index = [&](const std::string& n) {
                        return static_cast<std::size_t>(std::find(names.begin(), names.end(), n) - names.begin());
                    };
                    records.push_back({r.at("id").get<std::string>(), index(r.at("true").get<std::string>()),
                                       index(r.at("pred").get<std::string>()), {}});
                }
            } catch (const json::exception& e) {
                throw Error(ErrorKind::Report, "malformed metrics for " + t + ": " + e.what());
            }
            const auto metrics = summarize(t, cm);
            const auto scores = scores_from_json(score_docs[k]);

            render_confusion_svg(cm, dir / "confusion.svg", t + " confusion matrix");
            for (const auto& s : scores) {
                if (s.space != "2d") continue;
                const auto table = parse_projection_csv(read_file(opts.out / "projection" / t / (s.method + ".csv")));
                const std::string title = t + (s.method == "tsne" ? " t-SNE" : " UMAP");
                render_scatter_svg(table.coords, table.labels, dir / (s.method + ".svg"), title);
            }
            render_tables({metrics}, scores, dir / "metrics.md");
            write_file_atomic(dir / "cluster_scores.json", score_docs[k].dump(2) + "\n");
            write_file_atomic(dir / "gallery.json", gallery_json(t, gallery_entries(records, cm.class_names)));
            all_metrics.push_back(metrics);
            all_scores.insert(all_scores.end(), scores.begin(), scores.end());
            out << t << ": report written to " << dir.string() << '\n';
        }
        render_tables(all_metrics, all_scores, opts.out / "report" / "summary.md");
        return 0;
    });
}

int cmd_pipeline(const PipelineOptions& opts, std::ostream& out, std::ostream& err) {
    if (opts.treatments.empty()) {
        err << "error: no treatments selected\n";
        return kExitUsage;
    }
    if (!opts.skip_train && opts.trainer_cmd.empty()) {
        err << "error: configure --trainer-cmd or pass --skip-train with existing interchange files\n";
        return kExitUsage;
    }
    if (!opts.skip_train && !opts.pools) {
        err << "error: training needs --pools to build manifests\n";
        return kExitUsage;
    }

    if (opts.pools) {
        const int rc = guarded(err, [&] {
            build_manifests(*opts.pools, opts.treatments, opts.seed, opts.real_per_class, opts.out, out);
            return 0;
        });
        if (rc != 0) return rc;
    }

    std::vector<std::string> names;
    for (Treatment t : opts.treatments) {
        const std::string name(to_string(t));
        names.push_back(name);
        const fs::path inter = opts.out / "interchange" / name;

        if (opts.skip_train) {
            if (opts.predictions) {
                const int rc = guarded(err, [&] {
                    for (const char* f : {"predictions.csv", "embeddings.csv", "embeddings.json"}) {
                        const auto src = *opts.predictions / name / f;
                        if (fs::is_regular_file(src)) write_file_atomic(inter / f, read_file(src));
                    }
                    return 0;
                });
                if (rc != 0) return rc;
            }
        } else {
            const auto manifest = opts.out / "manifests" / (name + ".json");
            const auto log = opts.out / "logs" / (name + ".trainer.log");
            fs::create_directories(log.parent_path());
            fs::create_directories(inter);
            const auto cmd = expand_trainer_command(opts.trainer_cmd, manifest, inter, opts.seed, name);
            out << name << ": running trainer\n";
            const int status = std::system(("(" + cmd + ") > " + shell_quote(log.string()) + " 2>&1").c_str());
            int code = 1;
            if (status != -1 && WIFEXITED(status)) code = WEXITSTATUS(status);
            if (code != 0) {
                err << "error: trainer failed for " << name << " with exit code " << code << "; log: " << log.string()
                    << '\n';
                return code;
            }
        }

        EvalOptions eo{inter / "predictions.csv", name, opts.out};
        if (const int rc = cmd_eval(eo, out, err); rc != 0) return rc;

        ProjectOptions po;
        po.embeddings = inter / "embeddings.csv";
        po.sidecar = inter / "embeddings.json";
        po.treatment = name;
        po.method = opts.method;
        po.tsne = opts.tsne;
        po.umap = opts.umap;
        po.out = opts.out;
        if (const int rc = cmd_project(po, out, err); rc != 0) return rc;
    }

    if (const int rc = cmd_report({opts.out, names}, out, err); rc != 0) return rc;
    out << "pipeline complete: " << names.size() << " treatments under " << opts.out.string() << '\n';
    return 0;
}

}  // namespace hybrideval
