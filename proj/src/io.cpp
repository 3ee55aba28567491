/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: src/io.cpp
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
#include "facefit/io.hpp"

#include "facefit/util.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace facefit {

namespace {

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;)
    {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos)
        {
            parts.push_back(line.substr(start));
            return parts;
        }
        parts.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string strip(const std::string& s)
{
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& text, const std::string& context)
{
    try
    {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (strip(text.substr(used)).empty())
            return v;
    } catch (const std::exception&)
    {
    }
    throw ValidationError(context + ": cannot parse number '" + text + "'");
}

std::vector<std::string> read_lines(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw Error("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line))
        lines.push_back(line);
    return lines;
}

} // namespace

std::string format_double(double value)
{
    // 17 significant digits round-trip any finite double.
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

LandmarkFile read_landmarks_csv(const std::string& path)
{
    LandmarkFile out;
    std::vector<std::array<double, 3>> rows;
    std::size_t line_no = 0;
    for (const std::string& raw : read_lines(path))
    {
        ++line_no;
        const std::string line = strip(raw);
        if (line.empty())
            continue;
        const std::string where = path + ":" + std::to_string(line_no);
        if (line[0] == '#')
        {
            std::istringstream ss(line.substr(1));
            std::string tag;
            ss >> tag;
            if (tag == "bbox")
            {
                BBox box;
                if (!(ss >> box.x >> box.y >> box.w >> box.h))
                    throw ValidationError(where + ": malformed bbox header");
                out.bbox = box;
            }
            continue;
        }
        const auto parts = split(line, ',');
        if (parts.size() != 2 && parts.size() != 3)
            throw ValidationError(where + ": expected 'x,y[,valid]'");
        std::array<double, 3> row{parse_double(parts[0], where), parse_double(parts[1], where), 1.0};
        if (parts.size() == 3)
            row[2] = parse_double(parts[2], where);
        rows.push_back(row);
    }
    out.points.resize(2, static_cast<Eigen::Index>(rows.size()));
    out.valid.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
    {
        out.points(0, static_cast<Eigen::Index>(r)) = rows[r][0];
        out.points(1, static_cast<Eigen::Index>(r)) = rows[r][1];
        out.valid[r] = rows[r][2] != 0.0;
    }
    return out;
}

void write_landmarks_csv(const std::string& path, const Point2Set& points, const std::vector<bool>& valid,
                         const std::optional<BBox>& bbox)
{
    if (!valid.empty() && static_cast<Eigen::Index>(valid.size()) != points.cols())
        throw DimensionError("validity mask length does not match point count");
    std::ostringstream os;
    if (bbox)
    {
        os << "# bbox " << format_double(bbox->x) << " " << format_double(bbox->y) << " "
           << format_double(bbox->w) << " " << format_double(bbox->h) << "\n";
    }
    for (Eigen::Index c = 0; c < points.cols(); ++c)
    {
        const bool v = valid.empty() ? true : valid[static_cast<std::size_t>(c)];
        os << format_double(points(0, c)) << "," << format_double(points(1, c)) << "," << (v ? 1 : 0)
           << "\n";
    }
    atomic_write_file(path, os.str());
}

Point2Set read_points_csv(const std::string& path)
{
    std::vector<std::array<double, 2>> rows;
    std::size_t line_no = 0;
    for (const std::string& raw : read_lines(path))
    {
        ++line_no;
        const std::string line = strip(raw);
        if (line.empty() || line[0] == '#')
            continue;
        const std::string where = path + ":" + std::to_string(line_no);
        const auto parts = split(line, ',');
        if (parts.size() != 2)
            throw ValidationError(where + ": expected 'x,y'");
        rows.push_back({parse_double(parts[0], where), parse_double(parts[1], where)});
    }
    Point2Set out(2, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
    {
        out(0, static_cast<Eigen::Index>(r)) = rows[r][0];
        out(1, static_cast<Eigen::Index>(r)) = rows[r][1];
    }
    return out;
}

void write_points_csv(const std::string& path, const Point2Set& points)
{
    std::ostringstream os;
    for (Eigen::Index c = 0; c < points.cols(); ++c)
        os << format_double(points(0, c)) << "," << format_double(points(1, c)) << "\n";
    atomic_write_file(path, os.str());
}

KeypointPair read_matches_csv(const std::string& path)
{
    std::vector<std::array<double, 4>> rows;
    std::size_t line_no = 0;
    for (const std::string& raw : read_lines(path))
    {
        ++line_no;
        const std::string line = strip(raw);
        if (line.empty() || line[0] == '#')
            continue;
        const std::string where = path + ":" + std::to_string(line_no);
        const auto parts = split(line, ',');
        if (parts.size() != 4)
            throw ValidationError(where + ": expected 'xi,yi,xj,yj'");
        rows.push_back({parse_double(parts[0], where), parse_double(parts[1], where),
                        parse_double(parts[2], where), parse_double(parts[3], where)});
    }
    KeypointPair pair;
    pair.in_i.resize(2, static_cast<Eigen::Index>(rows.size()));
    pair.in_j.resize(2, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
    {
        pair.in_i(0, static_cast<Eigen::Index>(r)) = rows[r][0];
        pair.in_i(1, static_cast<Eigen::Index>(r)) = rows[r][1];
        pair.in_j(0, static_cast<Eigen::Index>(r)) = rows[r][2];
        pair.in_j(1, static_cast<Eigen::Index>(r)) = rows[r][3];
    }
    return pair;
}

void write_matches_csv(const std::string& path, const KeypointPair& pair)
{
    std::ostringstream os;
    for (int c = 0; c < pair.size(); ++c)
    {
        os << format_double(pair.in_i(0, c)) << "," << format_double(pair.in_i(1, c)) << ","
           << format_double(pair.in_j(0, c)) << "," << format_double(pair.in_j(1, c)) << "\n";
    }
    atomic_write_file(path, os.str());
}

namespace {

constexpr double kRadToDeg = 180.0 / M_PI;

nlohmann::ordered_json pose_to_json(const Pose& pose)
{
    nlohmann::ordered_json j;
    j["scale"] = pose.scale;
    j["pitch_deg"] = pose.pitch * kRadToDeg;
    j["yaw_deg"] = pose.yaw * kRadToDeg;
    j["roll_deg"] = pose.roll * kRadToDeg;
    j["tx"] = pose.tx;
    j["ty"] = pose.ty;
    return j;
}

} // namespace

std::string fit_result_to_json(const FitResult& result)
{
    nlohmann::ordered_json j;
    j["m"] = std::vector<double>(result.m.m.data(), result.m.m.data() + 8);
    const Eigen::VectorXd p = result.p.flatten();
    j["p"] = std::vector<double>(p.data(), p.data() + p.size());
    j["pose"] = pose_to_json(result.pose);
    nlohmann::ordered_json energies;
    for (const char* tag : {"PC", "LFC", "CFC", "SPC"})
    {
        const auto it = result.per_term_energies.find(tag);
        energies[tag] = it == result.per_term_energies.end() ? 0.0 : it->second;
    }
    j["energies"] = std::move(energies);
    nlohmann::ordered_json trace = nlohmann::ordered_json::array();
    for (const auto& entry : result.trace)
    {
        nlohmann::ordered_json t;
        t["outer"] = entry.outer;
        t["inner"] = entry.inner;
        t["energy"] = entry.energy;
        t["damping"] = entry.damping;
        trace.push_back(std::move(t));
    }
    j["trace"] = std::move(trace);
    j["converged"] = result.converged;
    return j.dump(2) + "\n";
}

void write_fit_result(const std::string& path, const FitResult& result)
{
    atomic_write_file(path, fit_result_to_json(result));
}

void write_truth_json(const std::string& path, const SyntheticScene& scene)
{
    nlohmann::ordered_json j;
    j["m"] = std::vector<double>(scene.truth_m.m.data(), scene.truth_m.m.data() + 8);
    j["p_id"] = std::vector<double>(scene.truth_p.id.data(), scene.truth_p.id.data() + scene.truth_p.id.size());
    j["p_exp"] =
        std::vector<double>(scene.truth_p.exp.data(), scene.truth_p.exp.data() + scene.truth_p.exp.size());
    j["pose"] = pose_to_json(decompose_pose(scene.truth_m));
    j["markup"] = scene.observations.markup_name;
    j["noise_sigma"] = scene.noise_sigma;
    j["seed"] = scene.seed;
    nlohmann::ordered_json bbox;
    bbox["x"] = scene.observations.bbox.x;
    bbox["y"] = scene.observations.bbox.y;
    bbox["w"] = scene.observations.bbox.w;
    bbox["h"] = scene.observations.bbox.h;
    j["bbox"] = std::move(bbox);
    atomic_write_file(path, j.dump(2) + "\n");
}

TruthFile read_truth_json(const std::string& path)
{
    nlohmann::json j;
    try
    {
        std::ifstream is(path);
        if (!is)
            throw Error("cannot open file: " + path);
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e)
    {
        throw ValidationError(path + ": JSON parse error: " + e.what());
    }
    TruthFile truth;
    const auto m = j.at("m").get<std::vector<double>>();
    if (m.size() != 8)
        throw ValidationError(path + ": m must have 8 entries");
    for (int k = 0; k < 8; ++k)
        truth.m.m[k] = m[static_cast<std::size_t>(k)];
    const auto pid = j.at("p_id").get<std::vector<double>>();
    const auto pexp = j.at("p_exp").get<std::vector<double>>();
    truth.p_id = Eigen::Map<const Eigen::VectorXd>(pid.data(), static_cast<Eigen::Index>(pid.size()));
    truth.p_exp = Eigen::Map<const Eigen::VectorXd>(pexp.data(), static_cast<Eigen::Index>(pexp.size()));
    return truth;
}

void write_error_records_csv(const std::string& path, const std::vector<ErrorRecord>& records)
{
    std::ostringstream os;
    os << "image_id,metric,nme,n_points\n";
    for (const auto& r : records)
        os << r.image_id << "," << r.metric_kind << "," << format_double(r.nme) << "," << r.n_points << "\n";
    atomic_write_file(path, os.str());
}

void write_ced_csv(const std::string& path, const std::vector<std::pair<double, double>>& curve)
{
    std::ostringstream os;
    os << "threshold,fraction\n";
    for (const auto& [threshold, fraction] : curve)
        os << format_double(threshold) << "," << format_double(fraction) << "\n";
    atomic_write_file(path, os.str());
}

} /* namespace facefit */
