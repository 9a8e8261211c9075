// land: generate data, fit LAND / LAND-mixture / LS / GMM models, evaluate
// them and export density grids and samples.

#include "land/baselines.hpp"
#include "land/eval.hpp"
#include "land/io.hpp"
#include "land/kernels.hpp"
#include "land/land.hpp"
#include "land/metric.hpp"
#include "land/mixture.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>

using namespace land;
using io::Json;

namespace {

enum Exit { kOk = 0, kUsage = 2, kNotConverged = 3, kNumerical = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitOptions {
  std::string data;
  std::string model = "land";
  int k = 1;
  double sigma = 1.0;
  std::optional<double> rho;
  int samples = 3000;
  std::optional<std::string> init;
  std::uint64_t seed = 0;
  double tol = 1e-6;
  int max_iter = 100;
  double step_mu = 0.5;
  double step_a = 0.0;
};

void add_fit_options(CLI::App* cmd, FitOptions& o, bool with_model) {
  cmd->add_option("--data", o.data, "Dataset CSV (x1,...,xD[,label])")->required()->check(CLI::ExistingFile);
  if (with_model) {
    cmd->add_option("--model", o.model, "Model family")
        ->check(CLI::IsMember({"land", "land-mixture", "ls", "gmm"}));
  }
  cmd->add_option("--k", o.k, "Number of components")->check(CLI::PositiveNumber);
  cmd->add_option("--sigma", o.sigma, "Metric kernel bandwidth")->check(CLI::PositiveNumber);
  cmd->add_option("--rho", o.rho, "Metric regularizer (default 1e-2 * median pairwise distance^2)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--samples", o.samples, "Monte Carlo samples per constant estimate")->check(CLI::PositiveNumber);
  cmd->add_option("--init", o.init, "Initialization (default ls for land, gmm for land-mixture)")
      ->check(CLI::IsMember({"random", "ls", "gmm"}));
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--tol", o.tol, "Stop when the squared objective change is below this")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", o.max_iter, "Iteration cap")->check(CLI::NonNegativeNumber);
  cmd->add_option("--step-mu", o.step_mu, "Initial mean stepsize")->check(CLI::PositiveNumber);
  cmd->add_option("--step-a", o.step_a, "Initial factor stepsize (0 = automatic)")->check(CLI::NonNegativeNumber);
}

bool is_riemannian(const std::string& model) { return model != "gmm"; }

InitStrategy parse_init(const std::string& s) {
  if (s == "random") return InitStrategy::random;
  if (s == "ls") return InitStrategy::least_squares;
  return InitStrategy::gmm;
}

std::string resolved_init(const FitOptions& o) {
  if (o.init) return *o.init;
  return o.model == "land-mixture" ? "gmm" : "ls";
}

double resolved_rho(const FitOptions& o, const DataMatrix& data) {
  return o.rho ? *o.rho : suggest_rho(data);
}

Json fit_config_json(const FitOptions& o, const DataMatrix& data) {
  Json c;
  c["data"] = o.data;
  c["model"] = o.model;
  c["k"] = o.k;
  if (is_riemannian(o.model)) {
    c["sigma"] = o.sigma;
    c["rho"] = resolved_rho(o, data);
    c["samples"] = o.samples;
    c["init"] = resolved_init(o);
    c["tol"] = o.tol;
    c["max_iter"] = o.max_iter;
    c["step_mu"] = o.step_mu;
    c["step_a"] = o.step_a;
  }
  c["seed"] = o.seed;
  return c;
}

EmConfig make_fit_config(const FitOptions& o) {
  EmConfig cfg;
  cfg.step_mu = o.step_mu;
  cfg.step_A = o.step_a;
  cfg.mc_samples = o.samples;
  cfg.tol = o.tol;
  cfg.max_iter = o.max_iter;
  cfg.rng_seed = o.seed;
  cfg.init = parse_init(resolved_init(o));
  return cfg;
}

struct FitOutcome {
  Json model;
  std::vector<double> trace;
  bool converged = true;
  double log_likelihood = 0.0;
};

// Fits the requested model on `data`; the result carries the full JSON
// document (without trace).
FitOutcome run_fit(const FitOptions& o, const DataMatrix& data) {
  if (o.k > data.rows()) throw UsageError("--k exceeds the number of points");
  FitOutcome out;
  Json& j = out.model;
  j["model"] = o.model;
  j["K"] = o.k;
  j["seed"] = o.seed;
  if (o.model == "gmm") {
    GmmConfig gc;
    gc.seed = o.seed;
    const GmmResult g = gmm_fit(data, o.k, gc);
    j["weights"] = io::to_json(g.mixture.weights);
    j["components"] = Json::array();
    for (int c = 0; c < o.k; ++c) {
      Json comp;
      comp["mu"] = io::to_json(g.mixture.means[static_cast<size_t>(c)]);
      comp["covariance"] = io::to_json(g.mixture.covariances[static_cast<size_t>(c)]);
      j["components"].push_back(comp);
    }
    j["converged"] = g.converged;
    j["iterations"] = g.iterations;
    out.converged = g.converged;
    out.log_likelihood = g.log_likelihood;
    j["config"] = fit_config_json(o, data);
    return out;
  }

  const double rho = resolved_rho(o, data);
  const LearnedMetric metric(data, {o.sigma, rho});
  const EmConfig cfg = make_fit_config(o);
  LandMixture mix;
  if (o.model == "ls") {
    mix = ls_mixture(data, metric, o.k, cfg);
  } else if (o.model == "land" && o.k == 1) {
    const FitResult r = fit_mle(data, metric, cfg);
    mix.components = {r.params};
    mix.weights = Vector::Ones(1);
    out.trace = r.trace;
    out.converged = r.converged;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["failed_log_maps"] = r.failed_log_maps;
  } else {
    const EmResult r = em_fit(data, metric, o.k, cfg);
    mix = r.mixture;
    out.trace = r.trace;
    out.converged = r.converged;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["failed_log_maps"] = r.failed_log_maps;
  }
  out.log_likelihood = mixture_log_likelihood(data, mix, metric, cfg.geodesic);
  if (o.k == 1) {
    const Json comp = io::component_to_json(mix.components.front());
    for (const auto& [key, value] : comp.items()) j[key] = value;
  }
  const Json mj = io::mixture_to_json(mix);
  j["weights"] = mj["weights"];
  j["components"] = mj["components"];
  j["sigma"] = o.sigma;
  j["rho"] = rho;
  j["anchors"] = o.data;
  j["metric_anchor_file_hash"] = io::sha256_file(o.data);
  j["config"] = fit_config_json(o, data);
  return out;
}

// A fitted model loaded back from JSON together with its metric.
struct LoadedModel {
  std::string family;
  LandMixture mixture;          // Riemannian families
  GaussianMixture gmm;          // "gmm"
  std::unique_ptr<LearnedMetric> metric;
  DataMatrix anchors;
};

LoadedModel load_model(const std::string& path, const std::string& data_override) {
  const Json j = io::read_json(path);
  LoadedModel m;
  m.family = j.at("model").get<std::string>();
  if (m.family == "gmm") {
    m.gmm.weights = io::vector_from_json(j.at("weights"));
    for (const auto& c : j.at("components")) {
      m.gmm.means.push_back(io::vector_from_json(c.at("mu")));
      m.gmm.covariances.push_back(io::matrix_from_json(c.at("covariance")));
    }
    return m;
  }
  const std::string anchors = data_override.empty() ? j.at("anchors").get<std::string>() : data_override;
  if (io::sha256_file(anchors) != j.at("metric_anchor_file_hash").get<std::string>()) {
    throw UsageError("anchor file " + anchors + " does not match the hash stored in the model");
  }
  m.anchors = io::read_csv(anchors).points;
  m.metric = std::make_unique<LearnedMetric>(
      m.anchors, MetricParams{j.at("sigma").get<double>(), j.at("rho").get<double>()});
  m.mixture = io::mixture_from_json(j);
  return m;
}

int dim_of(const LoadedModel& m) { return m.family == "gmm" ? m.gmm.dim() : m.mixture.dim(); }

void write_sidecar(const std::string& out, const Json& config) { io::write_json(out + ".json", config); }

// ---------------------------------------------------------------------------

int cmd_gen(const std::string& kind, Index n, std::optional<double> noise, std::uint64_t seed,
            const std::string& out) {
  LabeledDataset ds;
  double used = 0.0;
  if (kind == "half-ellipsoid") {
    used = noise.value_or(0.05);
    ds = gen_half_ellipsoid(n, used, seed);
  } else {
    used = noise.value_or(0.08);
    ds = gen_two_moons(n, used, seed);
  }
  io::write_csv(out, ds);
  Json cfg;
  cfg["command"] = "gen";
  cfg["kind"] = kind;
  cfg["n"] = n;
  cfg["noise"] = used;
  cfg["seed"] = seed;
  write_sidecar(out, cfg);
  return kOk;
}

int cmd_fit(const FitOptions& o, const std::string& out, std::string trace_path) {
  const LabeledDataset ds = io::read_csv(o.data);
  FitOutcome r = run_fit(o, ds.points);
  r.model["log_likelihood"] = r.log_likelihood;
  io::write_json(out, r.model);
  if (trace_path.empty()) trace_path = out + ".trace.csv";
  Matrix rows(static_cast<Index>(r.trace.size()), 2);
  for (size_t i = 0; i < r.trace.size(); ++i) {
    rows(static_cast<Index>(i), 0) = static_cast<double>(i);
    rows(static_cast<Index>(i), 1) = r.trace[i];
  }
  io::write_table(trace_path, {"iteration", "objective"}, rows);
  write_sidecar(trace_path, r.model.at("config"));
  if (!r.converged) {
    std::cerr << "land: iteration cap reached without convergence; model written\n";
    return kNotConverged;
  }
  return kOk;
}

struct GridOptions {
  std::string model, data, out;
  double xmin = -1.5, xmax = 1.5, ymin = -1.0, ymax = 1.5;
  int res = 100;
};

int cmd_density_grid(const GridOptions& g) {
  const LoadedModel m = load_model(g.model, g.data);
  if (dim_of(m) != 2) throw UsageError("density-grid needs a two-dimensional model");
  const Index cells = static_cast<Index>(g.res) * g.res;
  Matrix rows(cells, 3);
  auto coord = [&](double lo, double hi, int i) {
    return g.res == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (g.res - 1);
  };
  const GeodesicSolverConfig geo;
  for_each_index(cells, Execution::parallel, [&](Index c) {
    const int iy = static_cast<int>(c / g.res), ix = static_cast<int>(c % g.res);
    Vector x(2);
    x << coord(g.xmin, g.xmax, ix), coord(g.ymin, g.ymax, iy);
    const double logp = m.family == "gmm" ? m.gmm.log_density(x) : mixture_log_density(m.mixture, *m.metric, x, geo);
    rows(c, 0) = x[0];
    rows(c, 1) = x[1];
    rows(c, 2) = std::exp(logp);
  });
  io::write_table(g.out, {"x", "y", "density"}, rows);
  Json cfg;
  cfg["command"] = "density-grid";
  cfg["model"] = g.model;
  cfg["xmin"] = g.xmin;
  cfg["xmax"] = g.xmax;
  cfg["ymin"] = g.ymin;
  cfg["ymax"] = g.ymax;
  cfg["res"] = g.res;
  write_sidecar(g.out, cfg);
  return kOk;
}

DataMatrix draw(const LoadedModel& m, Index n, std::uint64_t seed, int oversampling) {
  if (m.family == "gmm") return m.gmm.sample(n, seed);
  SampleConfig sc;
  sc.oversampling = oversampling;
  return sample_mixture(m.mixture, *m.metric, n, seed, sc);
}

struct SampleOptions {
  std::string model, data, out;
  Index n = 1000;
  std::uint64_t seed = 0;
  int oversampling = 10;
};

int cmd_sample(const SampleOptions& s) {
  const LoadedModel m = load_model(s.model, s.data);
  LabeledDataset ds;
  ds.points = draw(m, s.n, s.seed, s.oversampling);
  io::write_csv(s.out, ds);
  Json cfg;
  cfg["command"] = "sample";
  cfg["model"] = s.model;
  cfg["n"] = s.n;
  cfg["seed"] = s.seed;
  cfg["oversampling"] = s.oversampling;
  write_sidecar(s.out, cfg);
  return kOk;
}

struct EvalOptions {
  std::string what = "nll-truth";
  std::string model, out;
  Index n_samples = 10000;
  double noise = 0.05;
  int oversampling = 10;
  int k_max = 4;
  FitOptions fit;
};

int cmd_eval(EvalOptions e) {
  Json doc;
  Json cfg;
  cfg["command"] = "eval";
  cfg["what"] = e.what;
  Json records = Json::array();
  if (e.what == "nll-truth") {
    if (e.model.empty()) throw UsageError("nll-truth needs --model");
    const LoadedModel m = load_model(e.model, e.fit.data);
    const Json mj = io::read_json(e.model);
    const DataMatrix samples = draw(m, e.n_samples, e.fit.seed, e.oversampling);
    const double nll = mean_nll_under_truth(samples, half_ellipsoid_truth(e.noise));
    records.push_back(io::metric_record(m.family, mj.at("K").get<int>(), e.fit.seed, "mean_nll_under_truth", nll));
    cfg["model"] = e.model;
    cfg["n_samples"] = e.n_samples;
    cfg["noise"] = e.noise;
    cfg["oversampling"] = e.oversampling;
    cfg["seed"] = e.fit.seed;
  } else if (e.what == "f-measure") {
    if (e.model.empty() || e.fit.data.empty()) throw UsageError("f-measure needs --model and --data");
    const LabeledDataset ds = io::read_csv(e.fit.data);
    if (!ds.has_labels()) throw UsageError("f-measure needs a labeled dataset");
    const Json mj = io::read_json(e.model);
    const LoadedModel m = load_model(e.model, "");
    const Matrix r = m.family == "gmm" ? m.gmm.responsibilities(ds.points)
                                       : e_step(ds.points, m.mixture, *m.metric, GeodesicSolverConfig{}).r;
    const double f = f_measure(ds.labels, hard_assignments(r));
    records.push_back(io::metric_record(m.family, mj.at("K").get<int>(), mj.value("seed", std::uint64_t{0}),
                                        "f_measure", f));
    cfg["model"] = e.model;
    cfg["data"] = e.fit.data;
  } else {
    if (e.fit.data.empty()) throw UsageError("aic-bic needs --data");
    const LabeledDataset ds = io::read_csv(e.fit.data);
    const Index n = ds.points.rows();
    for (int k = 1; k <= e.k_max; ++k) {
      FitOptions o = e.fit;
      o.k = k;
      if (o.model == "land" && k > 1) o.model = "land-mixture";
      const FitOutcome r = run_fit(o, ds.points);
      const int nu = num_free_params(k, static_cast<int>(ds.points.cols()));
      const InformationCriteria ic = aic_bic(r.log_likelihood, nu, n);
      records.push_back(io::metric_record(e.fit.model, k, e.fit.seed, "log_likelihood", r.log_likelihood));
      records.push_back(io::metric_record(e.fit.model, k, e.fit.seed, "aic", ic.aic));
      records.push_back(io::metric_record(e.fit.model, k, e.fit.seed, "bic", ic.bic));
    }
    cfg["fit"] = fit_config_json(e.fit, ds.points);
    cfg["k_max"] = e.k_max;
  }
  doc["config"] = cfg;
  doc["records"] = records;
  io::write_json(e.out, doc);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locally adaptive normal distributions: fitting and evaluation"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Thread cap for the parallel kernels (0 = OpenMP default)")
      ->check(CLI::NonNegativeNumber);

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  std::string kind = "half-ellipsoid", gen_out;
  Index gen_n = 300;
  std::optional<double> gen_noise;
  std::uint64_t gen_seed = 0;
  gen->add_option("--kind", kind, "half-ellipsoid or two-moons")
      ->check(CLI::IsMember({"half-ellipsoid", "two-moons"}));
  gen->add_option("--n", gen_n, "Number of points")->check(CLI::PositiveNumber);
  gen->add_option("--noise", gen_noise, "Noise std (0.05 half-ellipsoid, 0.08 two-moons)")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--out", gen_out, "Output CSV")->required();

  auto* fit = app.add_subcommand("fit", "Fit a model");
  FitOptions fit_opts;
  std::string fit_out, trace_out;
  add_fit_options(fit, fit_opts, true);
  fit->add_option("--out", fit_out, "Model JSON")->required();
  fit->add_option("--trace", trace_out, "Objective trace CSV (default <out>.trace.csv)");

  auto* grid = app.add_subcommand("density-grid", "Evaluate a fitted 2D density on a grid");
  GridOptions grid_opts;
  grid->add_option("--model", grid_opts.model, "Model JSON")->required()->check(CLI::ExistingFile);
  grid->add_option("--data", grid_opts.data, "Anchor CSV (default: path stored in the model)");
  grid->add_option("--xmin", grid_opts.xmin);
  grid->add_option("--xmax", grid_opts.xmax);
  grid->add_option("--ymin", grid_opts.ymin);
  grid->add_option("--ymax", grid_opts.ymax);
  grid->add_option("--res", grid_opts.res, "Cells per axis")->check(CLI::PositiveNumber);
  grid->add_option("--out", grid_opts.out, "Output CSV")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate models");
  EvalOptions ev_opts;
  ev->add_option("--what", ev_opts.what, "nll-truth, f-measure or aic-bic")
      ->check(CLI::IsMember({"nll-truth", "f-measure", "aic-bic"}));
  ev->add_option("--model", ev_opts.model, "Model JSON (nll-truth, f-measure)")->check(CLI::ExistingFile);
  ev->add_option("--n-samples", ev_opts.n_samples, "Model samples for nll-truth")->check(CLI::PositiveNumber);
  ev->add_option("--noise", ev_opts.noise, "Noise of the generating half-ellipsoid density")
      ->check(CLI::PositiveNumber);
  ev->add_option("--oversampling", ev_opts.oversampling, "Importance resampling factor")
      ->check(CLI::PositiveNumber);
  ev->add_option("--k-max", ev_opts.k_max, "Largest K of the aic-bic sweep")->check(CLI::PositiveNumber);
  ev->add_option("--fit-model", ev_opts.fit.model, "Model family for aic-bic")
      ->check(CLI::IsMember({"land", "land-mixture", "ls", "gmm"}));
  ev->add_option("--data", ev_opts.fit.data, "Dataset CSV")->check(CLI::ExistingFile);
  ev->add_option("--sigma", ev_opts.fit.sigma)->check(CLI::PositiveNumber);
  ev->add_option("--rho", ev_opts.fit.rho)->check(CLI::PositiveNumber);
  ev->add_option("--samples", ev_opts.fit.samples)->check(CLI::PositiveNumber);
  ev->add_option("--init", ev_opts.fit.init)->check(CLI::IsMember({"random", "ls", "gmm"}));
  ev->add_option("--seed", ev_opts.fit.seed);
  ev->add_option("--tol", ev_opts.fit.tol)->check(CLI::PositiveNumber);
  ev->add_option("--max-iter", ev_opts.fit.max_iter)->check(CLI::NonNegativeNumber);
  ev->add_option("--out", ev_opts.out, "Metrics JSON")->required();

  auto* smp = app.add_subcommand("sample", "Draw samples from a fitted model");
  SampleOptions smp_opts;
  smp->add_option("--model", smp_opts.model, "Model JSON")->required()->check(CLI::ExistingFile);
  smp->add_option("--data", smp_opts.data, "Anchor CSV (default: path stored in the model)");
  smp->add_option("--n", smp_opts.n)->check(CLI::PositiveNumber);
  smp->add_option("--seed", smp_opts.seed);
  smp->add_option("--oversampling", smp_opts.oversampling)->check(CLI::PositiveNumber);
  smp->add_option("--out", smp_opts.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (threads > 0) set_num_threads(threads);
    if (gen->parsed()) return cmd_gen(kind, gen_n, gen_noise, gen_seed, gen_out);
    if (fit->parsed()) return cmd_fit(fit_opts, fit_out, trace_out);
    if (grid->parsed()) return cmd_density_grid(grid_opts);
    if (ev->parsed()) return cmd_eval(ev_opts);
    if (smp->parsed()) return cmd_sample(smp_opts);
  } catch (const NumericalError& e) {
    std::cerr << "land: numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "land: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
