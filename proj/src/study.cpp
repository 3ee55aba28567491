/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: src/study.cpp
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
 */
#include "facefit/study.hpp"

#include "facefit/eval.hpp"
#include "facefit/io.hpp"
#include "facefit/model_io.hpp"
#include "facefit/solver.hpp"
#include "facefit/synth.hpp"
#include "facefit/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace facefit {

namespace {

constexpr double kDegToRad = M_PI / 180.0;
constexpr double kRadToDeg = 180.0 / M_PI;

TermTag tag_from_string(const std::string& name)
{
    if (name == "PC")
        return TermTag::PC;
    if (name == "LFC")
        return TermTag::LFC;
    if (name == "CFC")
        return TermTag::CFC;
    if (name == "SPC")
        return TermTag::SPC;
    throw ValidationError("unknown constraint tag: '" + name + "'");
}

bool has_tag(const std::vector<TermTag>& toggles, TermTag tag)
{
    return std::find(toggles.begin(), toggles.end(), tag) != toggles.end();
}

Weights weights_from_toggles(const std::vector<TermTag>& toggles)
{
    Weights w;
    w.lambda_pr = has_tag(toggles, TermTag::PC) ? 1.0 : 0.0;
    w.lambda_lm = has_tag(toggles, TermTag::LFC) ? 5.0 : 0.0;
    w.lambda_c = has_tag(toggles, TermTag::CFC) ? 1.0 : 0.0;
    w.lambda_s = has_tag(toggles, TermTag::SPC) ? 1.0 : 0.0;
    return w;
}

/// Scale putting the padded frontal box near 256 px.
double scale_for_box(const MorphableModel& model, double box_side)
{
    const auto& mean = model.mean_shape();
    const double w = mean.row(0).maxCoeff() - mean.row(0).minCoeff();
    const double h = mean.row(1).maxCoeff() - mean.row(1).minCoeff();
    return box_side / (1.05 * std::sqrt(w * h));
}

ShapeParams random_params(const MorphableModel& model, std::mt19937_64& rng, double sigma)
{
    std::normal_distribution<double> gauss(0.0, sigma);
    ShapeParams p = model.zero_params();
    for (Eigen::Index i = 0; i < p.id.size(); ++i)
        p.id[i] = gauss(rng);
    for (Eigen::Index j = 0; j < p.exp.size(); ++j)
        p.exp[j] = gauss(rng);
    return p;
}

/// One-profile labeling: on top of the self-occlusion mask, landmarks whose
/// markup vertex lies on the turned-away half of the face (model-frame x) are
/// dropped, emulating profile datasets that label only the visible side.
void apply_profile_mask(const MorphableModel& model, Observations& obs, double yaw)
{
    const LandmarkMarkup& markup = model.markup(obs.markup_name);
    const double hidden_side = yaw > 0.0 ? 1.0 : -1.0;
    for (int l = 0; l < markup.size(); ++l)
    {
        const double x = model.mean_shape()(0, markup.indices[l]);
        if (x * hidden_side > 0.0)
            obs.landmark_mask[l] = false;
    }
}

/// NME of the fitted markup projections against the noise-free truth.
double truth_nme(const MorphableModel& model, const SyntheticScene& scene, const FitResult& fit)
{
    const LandmarkMarkup& markup = model.markup(scene.observations.markup_name);
    const DenseShape true_cols = assemble_columns(model, scene.truth_p, markup.indices);
    const DenseShape fit_cols = assemble_columns(model, fit.p, markup.indices);
    const Point2Set gt = project(transform(scene.truth_m, true_cols));
    const Point2Set pred = project(transform(fit.m, fit_cols));
    return nme_lp(pred, gt, {}, scene.observations.bbox);
}

StudyCell run_single_cell(const MorphableModel& model, const StudySpec& spec, std::uint64_t seed,
                          int toggle_index)
{
    StudyCell cell;
    cell.seed = seed;
    cell.toggle_index = toggle_index;
    try
    {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
        const double yaw_deg = spec.yaw_min_deg + (spec.yaw_max_deg - spec.yaw_min_deg) * unit(rng);
        Pose pose;
        pose.scale = scale_for_box(model, 256.0);
        pose.yaw = sign * yaw_deg * kDegToRad;
        pose.pitch = (unit(rng) * 16.0 - 8.0) * kDegToRad;
        pose.roll = (unit(rng) * 16.0 - 8.0) * kDegToRad;
        pose.tx = 200.0;
        pose.ty = 200.0;
        const ShapeParams p_true = random_params(model, rng, 0.3);
        const std::uint64_t scene_seed = rng();
        SyntheticScene scene = generate_scene(model, pose, p_true, spec.noise_sigma, scene_seed, "pts68",
                                              spec.contour_subsample);
        apply_profile_mask(model, scene.observations, pose.yaw);
        cell.yaw_true_deg = pose.yaw * kRadToDeg;

        // Initialize at the true pose pulled toward frontal by the configured
        // yaw offset, with a few pixels of translation error.
        Pose init_pose = pose;
        init_pose.yaw -= sign * spec.init_yaw_offset_deg * kDegToRad;
        init_pose.tx += unit(rng) * 10.0 - 5.0;
        init_pose.ty += unit(rng) * 10.0 - 5.0;

        SolveOptions opts;
        opts.weights = weights_from_toggles(spec.toggle_sets[toggle_index]);
        const FitResult fit =
            fit_single(model, scene.observations, compose_m(init_pose), model.zero_params(), opts);
        cell.yaw_err_deg = std::abs(fit.pose.yaw - pose.yaw) * kRadToDeg;
        cell.nme = truth_nme(model, scene, fit);
        cell.converged = fit.converged;
    } catch (const std::exception& e)
    {
        cell.failed = true;
        cell.error = e.what();
    }
    return cell;
}

/// All toggle cells of one pair-study seed. The first toggle set is the
/// baseline, fitted from the bbox initialization; later sets warm-start from
/// the baseline's solution, mirroring a staged schedule where the pairing
/// constraint fine-tunes a landmark-only fit.
std::vector<StudyCell> run_pair_seed(const MorphableModel& model, const StudySpec& spec,
                                     std::uint64_t seed)
{
    const std::size_t n_toggles = spec.toggle_sets.size();
    std::vector<StudyCell> cells(n_toggles);
    for (std::size_t t = 0; t < n_toggles; ++t)
    {
        cells[t].seed = seed;
        cells[t].toggle_index = static_cast<int>(t);
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double scale = scale_for_box(model, 256.0);
    Pose pose_i;
    pose_i.scale = scale;
    pose_i.yaw = (unit(rng) * 16.0 - 8.0) * kDegToRad;
    pose_i.pitch = (unit(rng) * 10.0 - 5.0) * kDegToRad;
    pose_i.tx = 200.0;
    pose_i.ty = 200.0;
    Pose pose_j = pose_i;
    const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
    const double yaw_deg = spec.yaw_min_deg + (spec.yaw_max_deg - spec.yaw_min_deg) * unit(rng);
    pose_j.yaw = sign * yaw_deg * kDegToRad;
    const ShapeParams p_true = random_params(model, rng, 0.3);
    const std::uint64_t scene_seed = rng();

    PairScene pair;
    try
    {
        pair = generate_pair(model, pose_i, pose_j, p_true, spec.n_sift, spec.noise_sigma, scene_seed,
                             "pts68", spec.contour_subsample);
        apply_profile_mask(model, pair.image_j.observations, pose_j.yaw);
    } catch (const std::exception& e)
    {
        for (auto& cell : cells)
        {
            cell.failed = true;
            cell.error = e.what();
        }
        return cells;
    }

    struct WarmStart
    {
        ProjectionParams m_i, m_j;
        ShapeParams p_i, p_j;
    };
    std::optional<WarmStart> baseline;

    for (std::size_t t = 0; t < n_toggles; ++t)
    {
        StudyCell& cell = cells[t];
        cell.yaw_true_deg = pose_j.yaw * kRadToDeg;
        try
        {
            SolveOptions opts;
            opts.weights = weights_from_toggles(spec.toggle_sets[t]);
            opts.visible_only_sift = true;
            auto [init_m_i, init_p_i] = init_from_bbox(model, pair.image_i.observations.bbox);
            auto [init_m_j, init_p_j] = init_from_bbox(model, pair.image_j.observations.bbox);
            if (t > 0 && baseline)
            {
                init_m_i = baseline->m_i;
                init_p_i = baseline->p_i;
                init_m_j = baseline->m_j;
                init_p_j = baseline->p_j;
            }
            const auto [fit_i, fit_j] =
                fit_pair(model, pair.image_i.observations, pair.image_j.observations, pair.keypoints,
                         init_m_i, init_p_i, init_m_j, init_p_j, opts);
            cell.yaw_err_deg = std::abs(fit_j.pose.yaw - pose_j.yaw) * kRadToDeg;
            cell.nme = truth_nme(model, pair.image_j, fit_j);
            cell.converged = fit_j.converged;
            if (t == 0)
                baseline = WarmStart{fit_i.m, fit_j.m, fit_i.p, fit_j.p};
        } catch (const std::exception& e)
        {
            cell.failed = true;
            cell.error = e.what();
        }
    }
    return cells;
}

} // namespace

StudySpec StudySpec::from_json_file(const std::string& path)
{
    nlohmann::json j;
    try
    {
        std::ifstream is(path);
        if (!is)
            throw Error("cannot open study spec: " + path);
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e)
    {
        throw ValidationError(path + ": JSON parse error: " + e.what());
    }
    StudySpec spec;
    spec.study_name = j.value("study_name", spec.study_name);
    spec.kind = j.value("kind", spec.kind);
    if (j.contains("seeds"))
    {
        spec.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    } else if (j.contains("seed_count"))
    {
        const auto count = j.at("seed_count").get<std::uint64_t>();
        for (std::uint64_t s = 1; s <= count; ++s)
            spec.seeds.push_back(s);
    }
    if (j.contains("toggle_sets"))
    {
        for (const auto& set : j.at("toggle_sets"))
        {
            std::vector<TermTag> toggles;
            for (const auto& name : set)
                toggles.push_back(tag_from_string(name.get<std::string>()));
            spec.toggle_sets.push_back(std::move(toggles));
        }
    }
    spec.yaw_min_deg = j.value("yaw_min_deg", spec.yaw_min_deg);
    spec.yaw_max_deg = j.value("yaw_max_deg", spec.yaw_max_deg);
    spec.noise_sigma = j.value("noise_sigma", spec.noise_sigma);
    spec.n_sift = j.value("n_sift", spec.n_sift);
    spec.init_yaw_offset_deg = j.value("init_yaw_offset_deg", spec.init_yaw_offset_deg);
    spec.contour_subsample = j.value("contour_subsample", spec.contour_subsample);
    spec.threads = j.value("threads", spec.threads);
    if (j.contains("model"))
    {
        const auto& m = j.at("model");
        spec.model_path = m.value("path", std::string());
        spec.model_seed = m.value("seed", spec.model_seed);
        spec.model_q = m.value("Q", spec.model_q);
        spec.model_n_id = m.value("n_id", spec.model_n_id);
        spec.model_n_exp = m.value("n_exp", spec.model_n_exp);
    }
    return spec;
}

void StudySpec::validate() const
{
    if (seeds.empty())
        throw ValidationError("study spec: seeds must be nonempty");
    if (toggle_sets.empty())
        throw ValidationError("study spec: toggle_sets must be nonempty");
    if (kind != "single" && kind != "pair")
        throw ValidationError("study spec: kind must be 'single' or 'pair'");
    if (!(yaw_min_deg <= yaw_max_deg))
        throw ValidationError("study spec: yaw range is inverted");
}

const StudyCell& StudyReport::cell(std::size_t seed_index, std::size_t toggle_index) const
{
    return cells.at(seed_index * spec.toggle_sets.size() + toggle_index);
}

std::string toggles_to_string(const std::vector<TermTag>& toggles)
{
    std::string out;
    for (const TermTag tag : toggles)
    {
        if (!out.empty())
            out += "+";
        out += term_name(tag);
    }
    return out.empty() ? "none" : out;
}

StudyReport run_study(const StudySpec& spec)
{
    spec.validate();
    StudyReport report;
    report.spec = spec;

    const MorphableModel model =
        spec.model_path.empty() ? synth_model(spec.model_seed, spec.model_q, spec.model_n_id, spec.model_n_exp)
                                : load_model(spec.model_path);

    const std::size_t n_toggles = spec.toggle_sets.size();
    report.cells.resize(spec.seeds.size() * n_toggles);
    const int degree = effective_parallelism(spec.threads);
    if (spec.kind == "pair")
    {
        // Toggle cells of one seed share a warm start; parallelize over seeds.
        parallel_for(spec.seeds.size(), degree, [&](std::size_t seed_index) {
            const auto cells = run_pair_seed(model, spec, spec.seeds[seed_index]);
            for (std::size_t t = 0; t < n_toggles; ++t)
                report.cells[seed_index * n_toggles + t] = cells[t];
        });
    } else
    {
        parallel_for(report.cells.size(), degree, [&](std::size_t idx) {
            const std::size_t seed_index = idx / n_toggles;
            const int toggle_index = static_cast<int>(idx % n_toggles);
            report.cells[idx] = run_single_cell(model, spec, spec.seeds[seed_index], toggle_index);
        });
    }

    for (std::size_t t = 1; t < n_toggles; ++t)
    {
        StudyComparison cmp;
        cmp.base_index = static_cast<int>(t - 1);
        cmp.alt_index = static_cast<int>(t);
        for (std::size_t s = 0; s < spec.seeds.size(); ++s)
        {
            const StudyCell& base = report.cell(s, t - 1);
            const StudyCell& alt = report.cell(s, t);
            if (base.failed || alt.failed)
                continue;
            ++cmp.n;
            cmp.wins_le_yaw += alt.yaw_err_deg <= base.yaw_err_deg ? 1 : 0;
            cmp.wins_lt_yaw += alt.yaw_err_deg < base.yaw_err_deg ? 1 : 0;
            cmp.wins_le_nme += alt.nme <= base.nme ? 1 : 0;
            cmp.wins_lt_nme += alt.nme < base.nme ? 1 : 0;
        }
        report.comparisons.push_back(cmp);
    }
    return report;
}

void write_study_report(const StudyReport& report, const std::string& out_dir)
{
    std::filesystem::create_directories(out_dir);
    const StudySpec& spec = report.spec;
    const std::size_t n_toggles = spec.toggle_sets.size();

    std::ostringstream csv;
    csv << "study,kind,seed,toggles,yaw_true_deg,yaw_err_deg,nme,converged,failed\n";
    for (std::size_t s = 0; s < spec.seeds.size(); ++s)
    {
        for (std::size_t t = 0; t < n_toggles; ++t)
        {
            const StudyCell& cell = report.cell(s, t);
            csv << spec.study_name << "," << spec.kind << "," << cell.seed << ","
                << toggles_to_string(spec.toggle_sets[t]) << "," << format_double(cell.yaw_true_deg) << ","
                << format_double(cell.yaw_err_deg) << "," << format_double(cell.nme) << ","
                << (cell.converged ? 1 : 0) << "," << (cell.failed ? 1 : 0) << "\n";
        }
    }
    atomic_write_file(out_dir + "/results.csv", csv.str());

    std::ostringstream md;
    md << "# Study: " << spec.study_name << "\n\n";
    md << "- kind: " << spec.kind << "\n";
    md << "- seeds: " << spec.seeds.size() << "\n";
    md << "- yaw range: [" << format_double(spec.yaw_min_deg) << ", " << format_double(spec.yaw_max_deg)
       << "] deg\n";
    md << "- noise sigma: " << format_double(spec.noise_sigma) << " px\n\n";
    md << "| toggles | mean yaw err (deg) | mean NME | fits failed |\n";
    md << "|---|---|---|---|\n";
    for (std::size_t t = 0; t < n_toggles; ++t)
    {
        double yaw_sum = 0.0, nme_sum = 0.0;
        int ok = 0, failed = 0;
        for (std::size_t s = 0; s < spec.seeds.size(); ++s)
        {
            const StudyCell& cell = report.cell(s, t);
            if (cell.failed)
            {
                ++failed;
                continue;
            }
            yaw_sum += cell.yaw_err_deg;
            nme_sum += cell.nme;
            ++ok;
        }
        md << "| " << toggles_to_string(spec.toggle_sets[t]) << " | "
           << format_double(ok > 0 ? yaw_sum / ok : 0.0) << " | " << format_double(ok > 0 ? nme_sum / ok : 0.0)
           << " | " << failed << " |\n";
    }
    md << "\n";
    for (const auto& cmp : report.comparisons)
    {
        md << "Comparison " << toggles_to_string(spec.toggle_sets[cmp.base_index]) << " -> "
           << toggles_to_string(spec.toggle_sets[cmp.alt_index]) << " (n=" << cmp.n << "): "
           << "yaw err <= base on " << cmp.wins_le_yaw << ", yaw err < base on " << cmp.wins_lt_yaw
           << ", NME <= base on " << cmp.wins_le_nme << ", NME < base on " << cmp.wins_lt_nme << "\n";
    }
    atomic_write_file(out_dir + "/summary.md", md.str());
}

} /* namespace facefit */
