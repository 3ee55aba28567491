/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: tools/main.cpp
 *
 * Copyright 2026 The facefit authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * Command-line surface. Exit codes: 0 success, 1 fit/validation failure,
 * 2 usage error.
 */
#include "facefit/correspondence.hpp"
#include "facefit/eval.hpp"
#include "facefit/gradcheck.hpp"
#include "facefit/io.hpp"
#include "facefit/mesh.hpp"
#include "facefit/model_io.hpp"
#include "facefit/solver.hpp"
#include "facefit/study.hpp"
#include "facefit/synth.hpp"
#include "facefit/util.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>

namespace {

using namespace facefit;

constexpr double kDegToRad = M_PI / 180.0;

/// Command-line misuse distinct from data/validation failures (exit 2).
class UsageError : public Error
{
public:
    using Error::Error;
};

struct PoseFlags
{
    double yaw_deg = 0.0;
    double pitch_deg = 0.0;
    double roll_deg = 0.0;
    double scale = 0.0; // 0: derive from box
    double box = 256.0;
    double tx = 160.0;
    double ty = 160.0;

    void add_to(CLI::App& cmd)
    {
        cmd.add_option("--yaw-deg", yaw_deg, "Yaw angle in degrees");
        cmd.add_option("--pitch-deg", pitch_deg, "Pitch angle in degrees");
        cmd.add_option("--roll-deg", roll_deg, "Roll angle in degrees");
        cmd.add_option("--scale", scale, "Camera scale; 0 derives it from --box");
        cmd.add_option("--box", box, "Approximate face box side in pixels used when --scale is 0");
        cmd.add_option("--tx", tx, "X translation in pixels");
        cmd.add_option("--ty", ty, "Y translation in pixels");
    }

    Pose resolve(const MorphableModel& model) const
    {
        Pose pose;
        pose.scale = scale;
        if (!(pose.scale > 0.0))
        {
            const auto& mean = model.mean_shape();
            const double w = mean.row(0).maxCoeff() - mean.row(0).minCoeff();
            const double h = mean.row(1).maxCoeff() - mean.row(1).minCoeff();
            pose.scale = box / (1.05 * std::sqrt(w * h));
        }
        pose.yaw = yaw_deg * kDegToRad;
        pose.pitch = pitch_deg * kDegToRad;
        pose.roll = roll_deg * kDegToRad;
        pose.tx = tx;
        pose.ty = ty;
        return pose;
    }
};

struct WeightFlags
{
    Weights weights; // defaults (lm, s, c) = (5, 1, 1), prior 1

    void add_to(CLI::App& cmd)
    {
        cmd.add_option("--lambda-pr", weights.lambda_pr, "Parameter prior weight");
        cmd.add_option("--lambda-lm", weights.lambda_lm, "Landmark term weight");
        cmd.add_option("--lambda-c", weights.lambda_c, "Contour term weight");
        cmd.add_option("--lambda-s", weights.lambda_s, "Keypoint pairing term weight");
    }
};

struct SolverFlags
{
    int max_outer = 10;
    int max_inner = 50;
    bool visible_only = false;

    void add_to(CLI::App& cmd)
    {
        cmd.add_option("--max-outer", max_outer, "Outer (re-correspondence) iteration cap");
        cmd.add_option("--max-inner", max_inner, "Inner descent iteration cap");
        cmd.add_flag("--visible-only", visible_only, "Restrict keypoint-vertex lookups to front-facing vertices");
    }

    SolveOptions options(const Weights& weights) const
    {
        SolveOptions opts;
        opts.max_outer = max_outer;
        opts.max_inner = max_inner;
        opts.weights = weights;
        opts.visible_only_sift = visible_only;
        return opts;
    }
};

std::string fit_output_path(const std::string& input, const std::string& out_dir)
{
    std::filesystem::path p(input);
    const std::string name = p.stem().string() + ".fit.json";
    if (out_dir.empty())
        return (p.parent_path() / name).string();
    std::filesystem::create_directories(out_dir);
    return (std::filesystem::path(out_dir) / name).string();
}

Observations observations_from_files(const std::string& landmarks_path, const std::string& contour_path,
                                     const std::string& markup_name, const MorphableModel& model,
                                     double band_tau, const std::vector<int>& band_indices)
{
    const LandmarkFile lm = read_landmarks_csv(landmarks_path);
    Observations obs;
    obs.markup_name = markup_name;
    obs.landmarks = lm.points;
    obs.landmark_mask = lm.valid;
    if (lm.points.cols() != model.markup(markup_name).size())
    {
        std::ostringstream msg;
        msg << landmarks_path << ": " << lm.points.cols() << " landmarks but markup '" << markup_name
            << "' has " << model.markup(markup_name).size();
        throw ValidationError(msg.str());
    }
    if (!lm.bbox)
        throw ValidationError(landmarks_path + ": missing '# bbox x y w h' header line");
    obs.bbox = *lm.bbox;
    if (!contour_path.empty())
    {
        obs.contour_points = read_points_csv(contour_path);
        if (band_tau > 0.0 && band_indices.size() >= 2)
        {
            Point2Set polyline(2, static_cast<Eigen::Index>(band_indices.size()));
            for (std::size_t k = 0; k < band_indices.size(); ++k)
            {
                const int idx = band_indices[k];
                if (idx < 0 || idx >= obs.landmarks.cols())
                    throw UsageError("--band-indices entry out of markup range");
                polyline.col(static_cast<Eigen::Index>(k)) = obs.landmarks.col(idx);
            }
            obs.contour_points = band_filter_edges(obs.contour_points, polyline, band_tau).points;
        }
    }
    return obs;
}

/// Per-input contour discovery: explicit path, else "<stem>.contour.csv".
std::string sibling_contour(const std::string& landmarks_path)
{
    std::filesystem::path p(landmarks_path);
    std::filesystem::path candidate = p.parent_path() / (p.stem().string() + ".contour.csv");
    if (std::filesystem::exists(candidate))
        return candidate.string();
    // scene.landmarks.csv -> scene.contour.csv
    std::filesystem::path stem(p.stem());
    if (stem.extension() == ".landmarks")
    {
        candidate = p.parent_path() / (stem.stem().string() + ".contour.csv");
        if (std::filesystem::exists(candidate))
            return candidate.string();
    }
    return "";
}

int cmd_fit(const std::string& model_path, const std::vector<std::string>& landmark_files,
            const std::string& contour_path, bool no_contour, const std::string& markup,
            const WeightFlags& wf, const SolverFlags& sf, const std::string& out_dir, int threads,
            double band_tau, const std::vector<int>& band_indices)
{
    if (landmark_files.size() > 1 && !contour_path.empty())
        throw UsageError("--contour applies to a single --landmarks input; use sibling "
                         "<name>.contour.csv files for batches");
    const MorphableModel model = load_model(model_path);
    const SolveOptions opts = sf.options(wf.weights);

    struct ItemResult
    {
        bool ok = false;
        double nme = 0.0;
        std::string message;
    };
    std::vector<ItemResult> results(landmark_files.size());
    const int degree = effective_parallelism(threads);
    parallel_for(landmark_files.size(), degree, [&](std::size_t idx) {
        const std::string& input = landmark_files[idx];
        try
        {
            std::string contour = contour_path;
            if (contour.empty() && !no_contour)
                contour = sibling_contour(input);
            const Observations obs =
                observations_from_files(input, contour, markup, model, band_tau, band_indices);
            const auto [init_m, init_p] = init_from_bbox(model, obs.bbox);
            const FitResult fit = fit_single(model, obs, init_m, init_p, opts);
            write_fit_result(fit_output_path(input, out_dir), fit);

            const LandmarkMarkup& mk = model.markup(markup);
            const Point2Set pred = project(transform(fit.m, assemble_columns(model, fit.p, mk.indices)));
            results[idx].nme = nme_lp(pred, obs.landmarks, obs.landmark_mask, obs.bbox);
            results[idx].ok = true;
        } catch (const std::exception& e)
        {
            results[idx].message = e.what();
        }
    });

    int failures = 0;
    double nme_sum = 0.0;
    int nme_count = 0;
    for (std::size_t idx = 0; idx < results.size(); ++idx)
    {
        if (!results[idx].ok)
        {
            ++failures;
            std::cerr << "error: " << landmark_files[idx] << ": " << results[idx].message << "\n";
            continue;
        }
        std::cout << landmark_files[idx] << ": NME-lp " << format_double(results[idx].nme) << "\n";
        nme_sum += results[idx].nme;
        ++nme_count;
    }
    if (nme_count > 0)
        std::cout << "mean NME-lp over " << nme_count << " image(s): " << format_double(nme_sum / nme_count)
                  << "\n";
    return failures == 0 ? 0 : 1;
}

int cmd_fit_pair(const std::string& model_path, const std::string& landmarks_i,
                 const std::string& landmarks_j, const std::string& matches_path,
                 const std::string& contour_i, const std::string& contour_j, const std::string& markup,
                 const WeightFlags& wf, const SolverFlags& sf, const std::string& out_dir)
{
    const MorphableModel model = load_model(model_path);
    const Observations obs_i = observations_from_files(landmarks_i, contour_i, markup, model, 0.0, {});
    const Observations obs_j = observations_from_files(landmarks_j, contour_j, markup, model, 0.0, {});
    const KeypointPair pair = read_matches_csv(matches_path);
    const SolveOptions opts = sf.options(wf.weights);
    const auto [init_m_i, init_p_i] = init_from_bbox(model, obs_i.bbox);
    const auto [init_m_j, init_p_j] = init_from_bbox(model, obs_j.bbox);
    const auto [fit_i, fit_j] =
        fit_pair(model, obs_i, obs_j, pair, init_m_i, init_p_i, init_m_j, init_p_j, opts);
    write_fit_result(fit_output_path(landmarks_i, out_dir), fit_i);
    write_fit_result(fit_output_path(landmarks_j, out_dir), fit_j);
    std::cout << "pair converged: " << (fit_i.converged ? "yes" : "no") << ", keypoint matches "
              << pair.size() << "\n";
    return 0;
}

ShapeParams scene_params(const MorphableModel& model, double p_sigma, std::uint64_t seed)
{
    ShapeParams p = model.zero_params();
    if (p_sigma > 0.0)
    {
        std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
        std::normal_distribution<double> gauss(0.0, p_sigma);
        for (Eigen::Index i = 0; i < p.id.size(); ++i)
            p.id[i] = gauss(rng);
        for (Eigen::Index j = 0; j < p.exp.size(); ++j)
            p.exp[j] = gauss(rng);
    }
    return p;
}

int cmd_synth_scene(const std::string& model_path, const std::string& prefix, const PoseFlags& pf,
                    double p_sigma, double noise, std::uint64_t seed, const std::string& markup,
                    int contour_every)
{
    const MorphableModel model = load_model(model_path);
    const Pose pose = pf.resolve(model);
    const ShapeParams p = scene_params(model, p_sigma, seed);
    const SyntheticScene scene = generate_scene(model, pose, p, noise, seed, markup, contour_every);
    write_landmarks_csv(prefix + ".landmarks.csv", scene.observations.landmarks,
                        scene.observations.landmark_mask, scene.observations.bbox);
    write_points_csv(prefix + ".contour.csv", scene.observations.contour_points);
    write_truth_json(prefix + ".truth.json", scene);
    std::cout << "wrote " << prefix << ".landmarks.csv (" << scene.observations.landmarks.cols()
              << " landmarks, " << scene.observations.valid_landmark_count() << " valid), " << prefix
              << ".contour.csv (" << scene.observations.contour_points.cols() << " points), " << prefix
              << ".truth.json\n";
    return 0;
}

int cmd_silhouette(const std::string& model_path, const std::string& out, const PoseFlags& pf,
                   const std::string& truth_path)
{
    const MorphableModel model = load_model(model_path);
    ProjectionParams m;
    ShapeParams p = model.zero_params();
    if (!truth_path.empty())
    {
        const TruthFile truth = read_truth_json(truth_path);
        m = truth.m;
        if (truth.p_id.size() == model.num_id() && truth.p_exp.size() == model.num_exp())
        {
            p.id = truth.p_id;
            p.exp = truth.p_exp;
        }
    } else
    {
        m = compose_m(pf.resolve(model));
    }
    const TransformedShape a = transform(m, assemble_shape(model, p));
    SilhouetteSet sil = silhouette_vertices(a, model.topology());
    if (model.has_markup("contour_mask"))
        sil = restrict_silhouette(sil, model.markup("contour_mask").indices);
    std::ostringstream os;
    os << "vertex_index,x,y\n";
    for (int v : sil.vertex_indices)
        os << v << "," << format_double(a(0, v)) << "," << format_double(a(1, v)) << "\n";
    atomic_write_file(out, os.str());
    std::cout << "wrote " << out << " (" << sil.vertex_indices.size() << " silhouette vertices, "
              << sil.boundary_edges.size() << " boundary edges)\n";
    return 0;
}

int cmd_check_grad(int trials, std::uint64_t seed, int q, int n_id, int n_exp,
                   const std::string& model_path, bool corrupt)
{
    if (trials <= 0)
        throw UsageError("--trials must be positive");
    const MorphableModel model =
        model_path.empty() ? synth_model(seed, q, n_id, n_exp) : load_model(model_path);
    const GradCheckReport report = check_jacobians(model, trials, seed, corrupt);
    std::printf("PC  max relative Jacobian error: %.3e\n", report.max_rel_pc);
    std::printf("LFC max relative Jacobian error: %.3e\n", report.max_rel_lfc);
    std::printf("CFC max relative Jacobian error: %.3e\n", report.max_rel_cfc);
    std::printf("SPC max relative Jacobian error: %.3e\n", report.max_rel_spc);
    const bool pass = report.pass(1e-6);
    std::printf("gradient check over %d trials: %s (tolerance 1e-06)\n", trials, pass ? "PASS" : "FAIL");
    return pass ? 0 : 1;
}

std::vector<double> read_error_values(const std::string& path)
{
    std::vector<double> values;
    std::ifstream is(path);
    if (!is)
        throw Error("cannot open file: " + path);
    std::string line;
    bool header_checked = false;
    int nme_column = -1;
    while (std::getline(is, line))
    {
        if (line.empty() || line[0] == '#')
            continue;
        if (!header_checked)
        {
            header_checked = true;
            if (line.rfind("image_id,", 0) == 0)
            {
                // Records CSV: locate the nme column.
                std::istringstream ss(line);
                std::string field;
                int col = 0;
                while (std::getline(ss, field, ','))
                {
                    if (field == "nme")
                        nme_column = col;
                    ++col;
                }
                if (nme_column < 0)
                    throw ValidationError(path + ": header has no 'nme' column");
                continue;
            }
        }
        if (nme_column >= 0)
        {
            std::istringstream ss(line);
            std::string field;
            for (int col = 0; col <= nme_column; ++col)
                std::getline(ss, field, ',');
            values.push_back(std::stod(field));
        } else
        {
            values.push_back(std::stod(line));
        }
    }
    return values;
}

std::vector<double> threshold_grid(double max_threshold, int steps)
{
    if (steps <= 0 || !(max_threshold > 0.0))
        throw UsageError("--ced-max must be positive and --ced-steps at least 1");
    std::vector<double> thresholds;
    for (int k = 1; k <= steps; ++k)
        thresholds.push_back(max_threshold * k / steps);
    return thresholds;
}

int cmd_eval(const std::vector<std::string>& pred_files, const std::vector<std::string>& gt_files,
             const std::string& metric, double interocular, const std::string& out,
             const std::string& ced_out, double ced_max, int ced_steps)
{
    if (pred_files.size() != gt_files.size())
        throw UsageError("--pred and --gt must be given the same number of times");
    if (metric != "lp" && metric != "nf")
        throw UsageError("--metric must be 'lp' or 'nf'");
    std::vector<ErrorRecord> records;
    std::vector<double> errors;
    int failures = 0;
    for (std::size_t k = 0; k < pred_files.size(); ++k)
    {
        try
        {
            const LandmarkFile pred = read_landmarks_csv(pred_files[k]);
            const LandmarkFile gt = read_landmarks_csv(gt_files[k]);
            if (pred.points.cols() != gt.points.cols())
                throw ValidationError("prediction and ground truth point counts differ");
            std::vector<bool> mask(pred.points.cols(), true);
            for (Eigen::Index c = 0; c < pred.points.cols(); ++c)
                mask[c] = pred.valid[c] && gt.valid[c];
            ErrorRecord record;
            record.image_id = std::filesystem::path(pred_files[k]).stem().string();
            record.metric_kind = metric;
            record.n_points = static_cast<int>(std::count(mask.begin(), mask.end(), true));
            if (metric == "lp")
            {
                if (!gt.bbox)
                    throw ValidationError(gt_files[k] + ": missing bbox header needed for NME-lp");
                record.nme = nme_lp(pred.points, gt.points, mask, *gt.bbox);
            } else
            {
                double io = interocular;
                if (!(io > 0.0))
                    io = interocular_outer_68(gt.points);
                record.nme = nme_nf(pred.points, gt.points, mask, io);
            }
            errors.push_back(record.nme);
            records.push_back(std::move(record));
        } catch (const std::exception& e)
        {
            ++failures;
            std::cerr << "error: " << pred_files[k] << ": " << e.what() << "\n";
        }
    }
    write_error_records_csv(out, records);
    if (!ced_out.empty() && !errors.empty())
        write_ced_csv(ced_out, ced_curve(errors, threshold_grid(ced_max, ced_steps)));
    if (!errors.empty())
    {
        double sum = 0.0;
        for (double e : errors)
            sum += e;
        std::cout << "mean NME-" << metric << " over " << errors.size() << " image(s): "
                  << format_double(sum / errors.size()) << "\n";
    }
    return failures == 0 ? 0 : 1;
}

int cmd_ced(const std::string& errors_path, const std::string& out, double max_threshold, int steps)
{
    const std::vector<double> errors = read_error_values(errors_path);
    if (errors.empty())
        throw ValidationError(errors_path + ": no error values found");
    write_ced_csv(out, ced_curve(errors, threshold_grid(max_threshold, steps)));
    std::cout << "wrote " << out << " (" << errors.size() << " errors, " << steps << " thresholds)\n";
    return 0;
}

int cmd_study(const std::string& spec_path, const std::string& out_dir, int threads_override)
{
    StudySpec spec = StudySpec::from_json_file(spec_path);
    if (threads_override > 0)
        spec.threads = threads_override;
    const StudyReport report = run_study(spec);
    write_study_report(report, out_dir);
    std::cout << "study '" << spec.study_name << "': " << report.cells.size() << " cells -> " << out_dir
              << "/results.csv\n";
    for (const auto& cmp : report.comparisons)
    {
        std::cout << toggles_to_string(spec.toggle_sets[cmp.base_index]) << " -> "
                  << toggles_to_string(spec.toggle_sets[cmp.alt_index]) << ": yaw<=base " << cmp.wins_le_yaw
                  << "/" << cmp.n << ", nme<base " << cmp.wins_lt_nme << "/" << cmp.n << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"facefit: dense 3D face model fitting to 2D observations"};
    app.require_subcommand(1);

    // --- synth-model -------------------------------------------------------
    auto* sm = app.add_subcommand("synth-model", "Generate a deterministic synthetic model file");
    std::uint64_t sm_seed = 1;
    int sm_q = 162, sm_id = 4, sm_exp = 2;
    std::string sm_out;
    bool sm_base64 = false;
    sm->add_option("--seed", sm_seed, "Generator seed");
    sm->add_option("-Q,--vertices", sm_q, "Vertex count (icosphere sizes: 12, 42, 162, 642, 2562)")
        ->required();
    sm->add_option("--id", sm_id, "Identity basis count");
    sm->add_option("--exp", sm_exp, "Expression basis count");
    sm->add_option("--out", sm_out, "Output model JSON path")->required();
    sm->add_flag("--base64", sm_base64, "Encode float blocks as base64");

    // --- synth-scene -------------------------------------------------------
    auto* ss = app.add_subcommand("synth-scene", "Generate observation CSVs plus a truth side-file");
    std::string ss_model, ss_prefix, ss_markup = "pts68";
    PoseFlags ss_pose;
    double ss_p_sigma = 0.0, ss_noise = 0.0;
    std::uint64_t ss_seed = 1;
    int ss_contour_every = 3;
    ss->add_option("--model", ss_model, "Model JSON path")->required();
    ss->add_option("--out-prefix", ss_prefix, "Output prefix for .landmarks.csv/.contour.csv/.truth.json")
        ->required();
    ss_pose.add_to(*ss);
    ss->add_option("--p-sigma", ss_p_sigma, "Std-dev of random shape coefficients (0: mean shape)");
    ss->add_option("--noise", ss_noise, "Gaussian observation noise sigma in pixels");
    ss->add_option("--seed", ss_seed, "Scene seed");
    ss->add_option("--markup", ss_markup, "Markup name");
    ss->add_option("--contour-every", ss_contour_every, "Keep every k-th silhouette vertex as a contour point");

    // --- silhouette --------------------------------------------------------
    auto* sil = app.add_subcommand("silhouette", "Dump silhouette vertices as CSV vertex_index,x,y");
    std::string sil_model, sil_out, sil_truth;
    PoseFlags sil_pose;
    sil->add_option("--model", sil_model, "Model JSON path")->required();
    sil->add_option("--out", sil_out, "Output CSV path")->required();
    sil->add_option("--truth", sil_truth, "Scene truth JSON to pose the model (overrides pose flags)");
    sil_pose.add_to(*sil);

    // --- fit ---------------------------------------------------------------
    auto* fit = app.add_subcommand("fit", "Fit the model to landmark (and contour) observations");
    std::string fit_model, fit_contour, fit_markup = "pts68", fit_out_dir;
    std::vector<std::string> fit_landmarks;
    bool fit_no_contour = false;
    WeightFlags fit_weights;
    SolverFlags fit_solver;
    int fit_threads = 1;
    std::uint64_t fit_seed = 1;
    double fit_band_tau = 0.0;
    std::vector<int> fit_band_indices;
    fit->add_option("--model", fit_model, "Model JSON path")->required();
    fit->add_option("--landmarks", fit_landmarks, "Landmark CSV file(s)")->required();
    fit->add_option("--contour", fit_contour, "Contour point CSV (single input only)");
    fit->add_flag("--no-contour", fit_no_contour, "Ignore sibling contour files");
    fit->add_option("--markup", fit_markup, "Markup name");
    fit->add_option("--out-dir", fit_out_dir, "Directory for .fit.json outputs (default: next to input)");
    fit->add_option("--threads", fit_threads, "Worker pool degree (DEFA_THREADS overrides)");
    fit->add_option("--seed", fit_seed, "Run seed (kept for config determinism; the solver itself is deterministic)");
    fit->add_option("--band-tau", fit_band_tau, "Band half-width in pixels for contour pre-filtering");
    fit->add_option("--band-indices", fit_band_indices,
                    "Markup positions forming the contour-landmark polyline for band filtering");
    fit_weights.add_to(*fit);
    fit_solver.add_to(*fit);

    // --- fit-pair ----------------------------------------------------------
    auto* fp = app.add_subcommand("fit-pair", "Jointly fit two images coupled by keypoint matches");
    std::string fp_model, fp_lm_i, fp_lm_j, fp_matches, fp_contour_i, fp_contour_j, fp_markup = "pts68",
                          fp_out_dir;
    WeightFlags fp_weights;
    SolverFlags fp_solver;
    fp->add_option("--model", fp_model, "Model JSON path")->required();
    fp->add_option("--landmarks-i", fp_lm_i, "Landmark CSV of image i")->required();
    fp->add_option("--landmarks-j", fp_lm_j, "Landmark CSV of image j")->required();
    fp->add_option("--matches", fp_matches, "Keypoint match CSV xi,yi,xj,yj")->required();
    fp->add_option("--contour-i", fp_contour_i, "Contour CSV of image i");
    fp->add_option("--contour-j", fp_contour_j, "Contour CSV of image j");
    fp->add_option("--markup", fp_markup, "Markup name");
    fp->add_option("--out-dir", fp_out_dir, "Directory for .fit.json outputs");
    fp_weights.add_to(*fp);
    fp_solver.add_to(*fp);

    // --- check-grad --------------------------------------------------------
    auto* cg = app.add_subcommand("check-grad", "Compare analytic Jacobians against finite differences");
    int cg_trials = 100, cg_q = 162, cg_id = 4, cg_exp = 2;
    std::uint64_t cg_seed = 1;
    std::string cg_model;
    bool cg_corrupt = false;
    cg->add_option("--trials", cg_trials, "Number of random configurations");
    cg->add_option("--seed", cg_seed, "Random seed");
    cg->add_option("-Q,--vertices", cg_q, "Synthetic model vertex count");
    cg->add_option("--id", cg_id, "Synthetic identity basis count");
    cg->add_option("--exp", cg_exp, "Synthetic expression basis count");
    cg->add_option("--model", cg_model, "Use a model file instead of a synthetic model");
    cg->add_flag("--corrupt", cg_corrupt, "Negative-control hook: perturb analytic Jacobians");

    // --- eval ---------------------------------------------------------------
    auto* ev = app.add_subcommand("eval", "Evaluate predictions against ground-truth landmark CSVs");
    std::vector<std::string> ev_pred, ev_gt;
    std::string ev_metric = "lp", ev_out, ev_ced_out;
    double ev_interocular = 0.0, ev_ced_max = 0.1;
    int ev_ced_steps = 20;
    ev->add_option("--pred", ev_pred, "Prediction CSV file(s)")->required();
    ev->add_option("--gt", ev_gt, "Ground-truth CSV file(s), same order")->required();
    ev->add_option("--metric", ev_metric, "lp (box-normalized) or nf (inter-ocular)");
    ev->add_option("--interocular", ev_interocular, "Inter-ocular override in pixels (nf only)");
    ev->add_option("--out", ev_out, "Per-image error records CSV")->required();
    ev->add_option("--ced-out", ev_ced_out, "Optional CED CSV path");
    ev->add_option("--ced-max", ev_ced_max, "Largest CED threshold");
    ev->add_option("--ced-steps", ev_ced_steps, "Number of CED thresholds");

    // --- ced ----------------------------------------------------------------
    auto* ced = app.add_subcommand("ced", "Cumulative error distribution from an error list");
    std::string ced_errors, ced_out;
    double ced_max = 0.1;
    int ced_steps = 20;
    ced->add_option("--errors", ced_errors, "Error records CSV or one value per line")->required();
    ced->add_option("--out", ced_out, "Output CSV threshold,fraction")->required();
    ced->add_option("--max", ced_max, "Largest threshold");
    ced->add_option("--steps", ced_steps, "Number of thresholds");

    // --- study ---------------------------------------------------------------
    auto* st = app.add_subcommand("study", "Run a constraint on/off study from a JSON spec");
    std::string st_spec, st_out;
    int st_threads = 0;
    st->add_option("--spec", st_spec, "Study spec JSON")->required();
    st->add_option("--out", st_out, "Output directory")->required();
    st->add_option("--threads", st_threads, "Worker pool degree override (DEFA_THREADS also applies)");

    try
    {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try
    {
        if (sm->parsed())
        {
            const MorphableModel model = synth_model(sm_seed, sm_q, sm_id, sm_exp);
            save_model(model, sm_out, sm_base64);
            std::cout << "wrote " << sm_out << " (Q=" << model.vertex_count() << ", n_id=" << model.num_id()
                      << ", n_exp=" << model.num_exp() << ")\n";
            return 0;
        }
        if (ss->parsed())
            return cmd_synth_scene(ss_model, ss_prefix, ss_pose, ss_p_sigma, ss_noise, ss_seed, ss_markup,
                                   ss_contour_every);
        if (sil->parsed())
            return cmd_silhouette(sil_model, sil_out, sil_pose, sil_truth);
        if (fit->parsed())
            return cmd_fit(fit_model, fit_landmarks, fit_contour, fit_no_contour, fit_markup, fit_weights,
                           fit_solver, fit_out_dir, fit_threads, fit_band_tau, fit_band_indices);
        if (fp->parsed())
            return cmd_fit_pair(fp_model, fp_lm_i, fp_lm_j, fp_matches, fp_contour_i, fp_contour_j,
                                fp_markup, fp_weights, fp_solver, fp_out_dir);
        if (cg->parsed())
            return cmd_check_grad(cg_trials, cg_seed, cg_q, cg_id, cg_exp, cg_model, cg_corrupt);
        if (ev->parsed())
            return cmd_eval(ev_pred, ev_gt, ev_metric, ev_interocular, ev_out, ev_ced_out, ev_ced_max,
                            ev_ced_steps);
        if (ced->parsed())
            return cmd_ced(ced_errors, ced_out, ced_max, ced_steps);
        if (st->parsed())
            return cmd_study(st_spec, st_out, st_threads);
    } catch (const UsageError& e)
    {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
