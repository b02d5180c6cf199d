// hybrideval: build treatment manifests, evaluate predictions, project
// embeddings, and render reports.

#include "hybrideval/commands.hpp"
#include "hybrideval/error.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <stdexcept>

using namespace hybrideval;

namespace {

const std::map<std::string, Method> kMethods{{"tsne", Method::Tsne}, {"umap", Method::Umap}, {"both", Method::Both}};

struct ProjectorFlags {
    double perplexity = 30.0;
    std::size_t n_neighbors = 15;
    double min_dist = 0.1;
    std::size_t tsne_iters = 1000;
    std::size_t umap_epochs = 500;
    Method method = Method::Both;
};

void add_projector_flags(CLI::App* cmd, ProjectorFlags& f) {
    cmd->add_option("--method", f.method, "tsne, umap or both")
        ->transform(CLI::CheckedTransformer(kMethods, CLI::ignore_case))
        ->envname("HYBRIDEVAL_METHOD");
    cmd->add_option("--perplexity", f.perplexity, "t-SNE perplexity")->envname("HYBRIDEVAL_PERPLEXITY");
    cmd->add_option("--n-neighbors", f.n_neighbors, "UMAP neighborhood size")->envname("HYBRIDEVAL_N_NEIGHBORS");
    cmd->add_option("--min-dist", f.min_dist, "UMAP min_dist")->envname("HYBRIDEVAL_MIN_DIST");
    cmd->add_option("--tsne-iters", f.tsne_iters, "t-SNE iterations")->envname("HYBRIDEVAL_TSNE_ITERS");
    cmd->add_option("--umap-epochs", f.umap_epochs, "UMAP epochs")->envname("HYBRIDEVAL_UMAP_EPOCHS");
}

void apply(const ProjectorFlags& f, std::uint64_t seed, TsneParams& tsne, UmapParams& umap) {
    tsne.perplexity = f.perplexity;
    tsne.total_iters = f.tsne_iters;
    tsne.seed = seed;
    umap.n_neighbors = f.n_neighbors;
    umap.min_dist = f.min_dist;
    umap.n_epochs = f.umap_epochs;
    umap.seed = seed;
}

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A bad --treatments value is a usage problem, not a data problem.
std::vector<Treatment> treatments_or_throw(const std::string& text) {
    try {
        return parse_treatment_list(text);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Evaluation harness for real/synthetic training-set treatments"};
    app.require_subcommand(1);

    std::string pools, out = "run", treatments = "H0..H4", trainer_cmd, predictions, embeddings, sidecar;
    std::string treatment = "adhoc";
    std::uint64_t seed = 42;
    std::size_t real_per_class = 750;
    bool skip_train = false;
    ProjectorFlags proj;

    auto* manifest = app.add_subcommand("manifest", "Build H0-H4 treatment manifests from image pools");
    manifest->add_option("--pools", pools, "Pool directory or CSV listing")->required()->envname("HYBRIDEVAL_POOLS");
    manifest->add_option("--treatments", treatments, "e.g. H0..H4 or H0,H3")->envname("HYBRIDEVAL_TREATMENTS");
    manifest->add_option("--seed", seed, "Sampling seed")->envname("HYBRIDEVAL_SEED");
    manifest->add_option("--real-per-class", real_per_class, "Real images sampled per class")
        ->envname("HYBRIDEVAL_REAL_PER_CLASS");
    manifest->add_option("--out", out, "Run directory")->envname("HYBRIDEVAL_OUT");

    auto* eval = app.add_subcommand("eval", "Confusion matrix and metrics from a predictions CSV");
    eval->add_option("--predictions", predictions, "Predictions CSV")->required();
    eval->add_option("--treatment", treatment, "Label for the output directory");
    eval->add_option("--out", out, "Run directory")->envname("HYBRIDEVAL_OUT");

    auto* project = app.add_subcommand("project", "t-SNE / UMAP projection with cluster scores");
    project->add_option("--embeddings", embeddings, "Embeddings CSV")->required();
    project->add_option("--sidecar", sidecar, "Sidecar JSON (default: <embeddings>.json)");
    project->add_option("--treatment", treatment, "Label for the output directory");
    project->add_option("--seed", seed, "Projection seed")->envname("HYBRIDEVAL_SEED");
    project->add_option("--out", out, "Run directory")->envname("HYBRIDEVAL_OUT");
    add_projector_flags(project, proj);

    auto* report = app.add_subcommand("report", "Render SVG figures and markdown tables");
    report->add_option("--out", out, "Run directory")->envname("HYBRIDEVAL_OUT");
    std::string report_treatments;
    report->add_option("--treatments", report_treatments, "Comma-separated treatments (default: all evaluated)");

    auto* pipeline = app.add_subcommand("pipeline", "manifest -> train -> eval -> project -> report");
    pipeline->add_option("--pools", pools, "Pool directory or CSV listing")->envname("HYBRIDEVAL_POOLS");
    pipeline->add_option("--treatments", treatments, "e.g. H0..H4")->envname("HYBRIDEVAL_TREATMENTS");
    pipeline->add_option("--seed", seed, "Seed for sampling and projections")->envname("HYBRIDEVAL_SEED");
    pipeline->add_option("--real-per-class", real_per_class, "Real images sampled per class")
        ->envname("HYBRIDEVAL_REAL_PER_CLASS");
    pipeline->add_option("--out", out, "Run directory")->envname("HYBRIDEVAL_OUT");
    pipeline->add_option("--trainer-cmd", trainer_cmd,
                         "Trainer command template; {manifest} {out} {seed} {treatment} are substituted")
        ->envname("HYBRIDEVAL_TRAINER_CMD");
    pipeline->add_flag("--skip-train", skip_train, "Use existing interchange files")->envname("HYBRIDEVAL_SKIP_TRAIN");
    pipeline->add_option("--predictions", predictions, "Interchange fixtures: <dir>/<treatment>/{predictions,embeddings}");
    add_projector_flags(pipeline, proj);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*manifest) {
            return cmd_manifest({pools, treatments_or_throw(treatments), seed, real_per_class, out}, std::cout, std::cerr);
        }
        if (*eval) return cmd_eval({predictions, treatment, out}, std::cout, std::cerr);
        if (*project) {
            ProjectOptions o;
            o.embeddings = embeddings;
            o.sidecar = sidecar;
            o.treatment = treatment;
            o.method = proj.method;
            o.out = out;
            apply(proj, seed, o.tsne, o.umap);
            return cmd_project(o, std::cout, std::cerr);
        }
        if (*report) {
            ReportOptions o{out, {}};
            if (!report_treatments.empty()) {
                for (Treatment t : treatments_or_throw(report_treatments)) o.treatments.emplace_back(to_string(t));
            }
            return cmd_report(o, std::cout, std::cerr);
        }
        if (*pipeline) {
            PipelineOptions o;
            if (!pools.empty()) o.pools = pools;
            o.treatments = treatments_or_throw(treatments);
            o.seed = seed;
            o.real_per_class = real_per_class;
            o.out = out;
            o.trainer_cmd = trainer_cmd;
            o.skip_train = skip_train;
            if (!predictions.empty()) o.predictions = predictions;
            o.method = proj.method;
            apply(proj, seed, o.tsne, o.umap);
            return cmd_pipeline(o, std::cout, std::cerr);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitUsage;
}
