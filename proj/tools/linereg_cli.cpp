// linereg: register scan sequences, evaluate trajectories, synthesize scenes.
//
//   linereg register --kind depth-image --input scans/ --out run/
//   linereg eval --est run/trajectory.tum --gt gt.tum --rpe --segments
//   linereg synth --scene box_room --frames 5 --out scans/
//   linereg fit --kind lidar-bin --input 000000.bin --out features.ply
//
// Exit codes: 0 success, 1 usage, 2 I/O or parse failure, 3 every pair failed.

#include "linereg/linereg.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace fs = std::filesystem;
using namespace linereg;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitRegistration = 3;

enum class DatasetKind { lidar_bin, depth_image, synthetic };

DatasetKind parse_kind(const std::string &s) {
    if (s == "lidar-bin")
        return DatasetKind::lidar_bin;
    if (s == "depth-image")
        return DatasetKind::depth_image;
    if (s == "synthetic")
        return DatasetKind::synthetic;
    throw InvalidInput("unknown dataset kind '" + s + "' (expected lidar-bin, depth-image or synthetic)");
}

/// Command-line values kept as strings so that only flags actually given
/// override the config file.
struct FlagTable {
    std::map<std::string, std::string> values;

    void add(CLI::App &app, const std::string &flag, const std::string &key, const std::string &help) {
        app.add_option_function<std::string>(
            flag, [this, key](const std::string &v) { values[key] = v; }, help);
    }

    void apply(KeyValueConfig &cfg) const {
        for (const auto &[k, v] : values)
            cfg.set(k, v);
    }
};

/// Everything a run depends on, resolved from config file + flags.
struct RunConfig {
    DatasetKind kind = DatasetKind::synthetic;
    std::vector<std::string> inputs;
    std::string scene = "box_room";
    std::size_t frames = 3;
    double noise = 0.0;
    double step_rotation = 2.0;
    double step_translation = 0.3;
    std::size_t ds_rows = 1, ds_cols = 1;
    GridConfig grid;
    DepthIntrinsics intrinsics;
    RansacConfig ransac;
    FeatureParams features;
    std::uint64_t seed = 0;
    std::string out = ".";
    KeyValueConfig resolved; ///< recorded in output headers
};

bool is_depth_like(const RunConfig &rc) {
    if (rc.kind == DatasetKind::depth_image)
        return true;
    if (rc.kind == DatasetKind::lidar_bin)
        return false;
    return std::holds_alternative<DepthCamera>(make_scene(rc.scene).sensor);
}

std::vector<std::string> list_inputs(const std::string &paths, DatasetKind kind) {
    std::vector<std::string> out;
    std::stringstream ss(paths);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty())
            continue;
        if (fs::is_directory(item)) {
            for (const auto &e : fs::directory_iterator(item)) {
                const std::string ext = e.path().extension().string();
                const bool ok = kind == DatasetKind::lidar_bin ? ext == ".bin" : (ext == ".png" || ext == ".pgm");
                if (e.is_regular_file() && ok)
                    out.push_back(e.path().string());
            }
        } else {
            if (!fs::exists(item))
                throw IoError("input not found: " + item);
            out.push_back(item);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

RunConfig resolve(const KeyValueConfig &kv) {
    RunConfig rc;
    rc.resolved = kv;
    rc.kind = parse_kind(kv.get_string("kind", "synthetic"));
    rc.scene = kv.get_string("scene", rc.scene);
    rc.frames = static_cast<std::size_t>(kv.get_int("frames", 3));
    rc.noise = kv.get_double("noise", 0.0);
    rc.step_rotation = kv.get_double("step_rotation", rc.step_rotation);
    rc.step_translation = kv.get_double("step_translation", rc.step_translation);
    rc.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
    rc.out = kv.get_string("out", ".");
    if (rc.kind != DatasetKind::synthetic) {
        const auto in = kv.get("input");
        if (!in)
            throw InvalidInput("--input is required for kind " + kv.get_string("kind", ""));
        rc.inputs = list_inputs(*in, rc.kind);
    } else {
        (void)make_scene(rc.scene); // validates the name
    }

    const bool depth = is_depth_like(rc);
    const long long ds_default = rc.kind == DatasetKind::depth_image ? 10 : 1;
    const long long dr = kv.get_int("downsample_rows", kv.get_int("downsample", ds_default));
    const long long dc = kv.get_int("downsample_cols", kv.get_int("downsample", ds_default));
    if (dr < 1 || dc < 1)
        throw InvalidInput("downsample steps must be >= 1");
    rc.ds_rows = static_cast<std::size_t>(dr);
    rc.ds_cols = static_cast<std::size_t>(dc);

    rc.grid.azimuth_bins = static_cast<std::size_t>(kv.get_int("grid.azimuth_bins", static_cast<long long>(rc.grid.azimuth_bins)));
    rc.grid.elevation_bins =
        static_cast<std::size_t>(kv.get_int("grid.elevation_bins", static_cast<long long>(rc.grid.elevation_bins)));
    rc.grid.elevation_min = deg2rad(kv.get_double("grid.elevation_min_deg", rad2deg(rc.grid.elevation_min)));
    rc.grid.elevation_range = deg2rad(kv.get_double("grid.elevation_range_deg", rad2deg(rc.grid.elevation_range)));
    rc.grid.validate();
    rc.intrinsics.fx = kv.get_double("depth.fx", rc.intrinsics.fx);
    rc.intrinsics.fy = kv.get_double("depth.fy", rc.intrinsics.fy);
    rc.intrinsics.cx = kv.get_double("depth.cx", rc.intrinsics.cx);
    rc.intrinsics.cy = kv.get_double("depth.cy", rc.intrinsics.cy);
    rc.intrinsics.depth_scale = kv.get_double("depth.scale", rc.intrinsics.depth_scale);
    rc.intrinsics.validate();

    const SolverKind solver = parse_solver(kv.get_string("solver", "7L"));
    rc.ransac = depth ? RansacConfig::depth_camera(solver) : RansacConfig::lidar(solver);
    rc.ransac.hypotheses = static_cast<std::size_t>(kv.get_int("hypotheses", static_cast<long long>(rc.ransac.hypotheses)));
    rc.ransac.refinement_rounds =
        static_cast<std::size_t>(kv.get_int("rounds", static_cast<long long>(rc.ransac.refinement_rounds)));
    rc.ransac.candidate_dist = kv.get_double("candidate_dist", rc.ransac.candidate_dist);
    rc.ransac.plane_angle_max = kv.get_double("plane_angle_max", rc.ransac.plane_angle_max);
    rc.ransac.inlier_dist = kv.get_double("inlier_dist", rc.ransac.inlier_dist);
    rc.ransac.ap.epsilon = kv.get_double("ap_epsilon", rc.ransac.ap.epsilon);
    rc.ransac.ap.max_iters = static_cast<std::size_t>(kv.get_int("ap_max_iters", static_cast<long long>(rc.ransac.ap.max_iters)));
    rc.ransac.threads = static_cast<unsigned>(kv.get_int("threads", 0));
    rc.ransac.seed = rc.seed;
    rc.ransac.validate();

    const std::size_t factor = std::max(rc.ds_rows, rc.ds_cols);
    rc.features = depth ? FeatureParams::depth_camera(factor) : FeatureParams::lidar(factor);
    rc.features.lines.inlier_dist = kv.get_double("feature_inlier_dist", rc.features.lines.inlier_dist);
    rc.features.planes.inlier_dist = rc.features.lines.inlier_dist;
    rc.features.normals.pair_dist = 2.0 * rc.features.lines.inlier_dist;
    rc.features.set_seed(rc.seed);
    return rc;
}

std::vector<std::string> header_lines(const std::string &command, const KeyValueConfig &kv) {
    std::vector<std::string> h{"linereg " + command};
    // Output location and thread count do not affect results.
    for (const auto &[k, v] : kv.values())
        if (k != "out" && k != "threads")
            h.push_back(k + " = " + v);
    return h;
}

OrganizedCloud load_frame(const RunConfig &rc, std::size_t k, const std::vector<RigidTransform> &synth_poses,
                          const SyntheticScene *scene) {
    OrganizedCloud cloud(0, 0);
    switch (rc.kind) {
    case DatasetKind::lidar_bin:
        cloud = organize_lidar(read_kitti_bin(rc.inputs[k]), rc.grid, rc.inputs[k]);
        break;
    case DatasetKind::depth_image:
        cloud = depth_to_cloud(read_depth_image(rc.inputs[k]), rc.intrinsics, rc.inputs[k]);
        break;
    case DatasetKind::synthetic:
        cloud = raycast_scene(*scene, synth_poses[k], k).cloud;
        break;
    }
    return downsample(cloud, rc.ds_rows, rc.ds_cols);
}

int cmd_register(const RunConfig &rc) {
    std::vector<RigidTransform> synth_poses;
    std::optional<SyntheticScene> scene;
    std::size_t n = rc.inputs.size();
    if (rc.kind == DatasetKind::synthetic) {
        scene = make_scene(rc.scene, rc.noise, rc.seed);
        synth_poses = scene_trajectory(rc.scene, rc.frames, rc.step_rotation, rc.step_translation);
        n = rc.frames;
    }
    if (n < 2)
        throw InvalidInput("register needs at least 2 frames, got " + std::to_string(n));
    fs::create_directories(rc.out);

    const bool planes = rc.ransac.solver != SolverKind::ap7l;
    std::vector<OrganizedCloud> clouds;
    std::vector<FrameFeatures> feats;
    for (std::size_t k = 0; k < n; ++k) {
        clouds.push_back(load_frame(rc, k, synth_poses, scene ? &*scene : nullptr));
        feats.push_back(extract_features(clouds.back(), rc.features, planes, rc.ransac.threads));
    }

    std::ofstream diag(fs::path(rc.out) / "diagnostics.csv");
    if (!diag)
        throw IoError("cannot write diagnostics in " + rc.out);
    for (const auto &h : header_lines("register", rc.resolved))
        diag << "# " << h << '\n';
    diag << "pair,status,score,inliers,round,line_candidates,plane_candidates,hypotheses,valid,poses,round_score,"
            "round_inliers,carried_over\n";

    std::vector<RigidTransform> motions;
    std::size_t failures = 0;
    for (std::size_t k = 1; k < n; ++k) {
        RigidTransform T = RigidTransform::identity();
        RegistrationDiagnostics d;
        std::string status = "ok";
        try {
            auto res = register_pair(feats[k - 1], feats[k], rc.ransac);
            T = res.pose;
            d = res.diagnostics;
        } catch (const RegistrationFailure &e) {
            ++failures;
            status = "failed";
            d = e.diagnostics();
            std::cerr << "warning: pair " << k - 1 << "->" << k << ": " << e.what() << "; using identity\n";
        }
        if (d.rounds.empty())
            diag << k << ',' << status << ",0,0,,,,,,,,,\n";
        for (const auto &r : d.rounds)
            diag << k << ',' << status << ',' << d.score << ',' << d.inliers << ',' << r.round << ','
                 << r.line_candidates << ',' << r.plane_candidates << ',' << r.hypotheses << ',' << r.valid_hypotheses
                 << ',' << r.poses_scored << ',' << r.best_score << ',' << r.inliers << ',' << (r.carried_over ? 1 : 0)
                 << '\n';
        motions.push_back(motion_from_registration(T));
    }

    const Trajectory traj = chain_trajectory(motions);
    const auto header = header_lines("register", rc.resolved);
    write_trajectory((fs::path(rc.out) / "trajectory.tum").string(), traj, TrajectoryFormat::tum, header);
    write_trajectory((fs::path(rc.out) / "trajectory.kitti").string(), traj, TrajectoryFormat::kitti, header);

    std::vector<PlyVertex> verts;
    for (std::size_t k = 0; k < n; ++k)
        for (const auto &p : clouds[k].points)
            if (p)
                verts.push_back({traj[k](*p), static_cast<int>(k)});
    std::vector<std::string> comments;
    for (const auto &h : header)
        comments.push_back(h);
    write_ply((fs::path(rc.out) / "registered.ply").string(), verts, {}, comments);

    if (scene) {
        Trajectory gt;
        for (std::size_t k = 0; k < n; ++k)
            gt.push_back(static_cast<double>(k), synth_poses[0].inverse() * synth_poses[k]);
        write_trajectory((fs::path(rc.out) / "groundtruth.tum").string(), gt, TrajectoryFormat::tum, header);
    }

    std::cout << "registered " << n << " frames (" << failures << " failed pairs) -> " << rc.out << '\n';
    return failures == n - 1 ? kExitRegistration : 0;
}

int cmd_synth(const KeyValueConfig &kv) {
    const std::string name = kv.get_string("scene", "box_room");
    const std::uint64_t seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
    const auto frames = static_cast<std::size_t>(kv.get_int("frames", 5));
    const std::string out = kv.get_string("out", ".");
    const SyntheticScene scene = make_scene(name, kv.get_double("noise", 0.0), seed);
    const auto poses = scene_trajectory(name, frames, kv.get_double("step_rotation", 2.0),
                                        kv.get_double("step_translation", 0.3));
    fs::create_directories(out);
    const auto header = header_lines("synth", kv);

    KeyValueConfig scene_cfg;
    const auto *cam = std::get_if<DepthCamera>(&scene.sensor);
    if (cam) {
        scene_cfg.set("kind", "depth-image");
        scene_cfg.set("depth.fx", std::to_string(cam->intrinsics.fx));
        scene_cfg.set("depth.fy", std::to_string(cam->intrinsics.fy));
        scene_cfg.set("depth.cx", std::to_string(cam->intrinsics.cx));
        scene_cfg.set("depth.cy", std::to_string(cam->intrinsics.cy));
        scene_cfg.set("depth.scale", std::to_string(cam->intrinsics.depth_scale));
    } else {
        const auto &g = std::get<GridConfig>(scene.sensor);
        scene_cfg.set("kind", "lidar-bin");
        scene_cfg.set("grid.azimuth_bins", std::to_string(g.azimuth_bins));
        scene_cfg.set("grid.elevation_bins", std::to_string(g.elevation_bins));
        std::ostringstream a, b;
        a << std::setprecision(17) << rad2deg(g.elevation_min);
        b << std::setprecision(17) << rad2deg(g.elevation_range);
        scene_cfg.set("grid.elevation_min_deg", a.str());
        scene_cfg.set("grid.elevation_range_deg", b.str());
    }
    scene_cfg.set("input", ".");
    {
        std::ofstream f(fs::path(out) / "scene.cfg");
        if (!f)
            throw IoError("cannot write in " + out);
        for (const auto &h : header)
            f << "# " << h << '\n';
        scene_cfg.write(f);
    }

    Trajectory gt;
    for (std::size_t k = 0; k < frames; ++k) {
        const auto rr = raycast_scene(scene, poses[k], k);
        char base[32];
        std::snprintf(base, sizeof base, "frame_%04zu", k);
        if (cam) {
            DepthImage16 img(cam->width, cam->height, 0);
            for (std::size_t v = 0; v < cam->height; ++v)
                for (std::size_t u = 0; u < cam->width; ++u)
                    if (const auto &p = rr.cloud.at(v, u)) {
                        const double raw = std::round(p->z() * cam->intrinsics.depth_scale);
                        img.at(u, v) = static_cast<std::uint16_t>(std::clamp(raw, 0.0, 65535.0));
                    }
            write_png16((fs::path(out) / (std::string(base) + ".png")).string(), img);
        } else {
            write_kitti_bin((fs::path(out) / (std::string(base) + ".bin")).string(), rr.cloud.present_points());
        }
        gt.push_back(static_cast<double>(k), poses[0].inverse() * poses[k]);
    }
    write_trajectory((fs::path(out) / "groundtruth.tum").string(), gt, TrajectoryFormat::tum, header);
    write_trajectory((fs::path(out) / "groundtruth.kitti").string(), gt, TrajectoryFormat::kitti, header);
    std::cout << "wrote " << frames << " frames of '" << name << "' to " << out << '\n';
    return 0;
}

int cmd_eval(const std::string &est_path, const std::string &gt_path, bool rpe, bool segments, double scale,
             std::size_t step, const std::string &csv_path) {
    const Trajectory est = read_trajectory(est_path);
    const Trajectory gt = read_trajectory(gt_path);
    if (est.size() != gt.size())
        throw InvalidInput("trajectories differ in length: " + std::to_string(est.size()) + " vs " +
                           std::to_string(gt.size()));
    if (!rpe && !segments)
        rpe = true;
    std::ofstream csv;
    if (!csv_path.empty()) {
        csv.open(csv_path);
        if (!csv)
            throw IoError("cannot write " + csv_path);
        csv << "# linereg eval\n# est = " << est_path << "\n# gt = " << gt_path << '\n';
    }
    if (rpe) {
        const RpeReport rep = relative_pose_error(est, gt);
        write_summary_table(std::cout, {{fs::path(est_path).filename().string(), rep}});
        if (csv)
            write_rpe_csv(csv, rep);
    }
    if (segments) {
        SegmentErrorConfig cfg = SegmentErrorConfig::scaled(scale);
        cfg.step = step;
        const auto seg = kitti_segment_errors(est, gt, cfg);
        if (!seg) {
            std::cout << "segment errors: trajectory shorter than the smallest segment length\n";
        } else {
            std::cout << std::setprecision(6) << "segment errors: translation " << seg->translation_percent
                      << " %, rotation " << seg->rotation_deg_per_m << " deg/m over " << seg->segments
                      << " segments\n";
            if (csv)
                csv << "segments,translation_percent,rotation_deg_per_m\n"
                    << seg->segments << ',' << std::setprecision(12) << seg->translation_percent << ','
                    << seg->rotation_deg_per_m << '\n';
        }
    }
    return 0;
}

int cmd_fit(const RunConfig &rc) {
    if (rc.kind == DatasetKind::synthetic)
        throw InvalidInput("fit needs a file input (lidar-bin or depth-image)");
    if (rc.inputs.empty())
        throw InvalidInput("fit: no input files");
    const OrganizedCloud cloud = load_frame(rc, 0, {}, nullptr);
    const FrameFeatures f = extract_features(cloud, rc.features, true, rc.ransac.threads);
    std::vector<PlyVertex> verts;
    std::vector<PlyEdge> edges;
    auto add = [&](const FittedLine &l, int label) {
        const int base = static_cast<int>(verts.size());
        verts.push_back({l.segment.a(), label});
        verts.push_back({l.segment.b(), label});
        edges.push_back({base, base + 1, label});
    };
    for (const auto &l : f.h_lines)
        add(l, 0);
    for (const auto &l : f.v_lines)
        add(l, 1);
    fs::path out(rc.out);
    if (out.extension() != ".ply")
        out /= "features.ply";
    if (out.has_parent_path())
        fs::create_directories(out.parent_path());
    write_ply(out.string(), verts, edges, header_lines("fit", rc.resolved));
    std::cout << rc.inputs[0] << ": " << f.h_lines.size() << " H-lines, " << f.v_lines.size() << " V-lines, "
              << f.planes.size() << " planes\n";
    for (const auto &p : f.planes)
        std::cout << "  plane n=(" << p.plane.normal.transpose() << ") d=" << p.plane.offset << " inliers "
                  << p.inlier_count << '\n';
    std::cout << "features -> " << out.string() << '\n';
    return 0;
}

void add_run_flags(CLI::App &cmd, FlagTable &t) {
    t.add(cmd, "--kind", "kind", "lidar-bin | depth-image | synthetic");
    t.add(cmd, "--input", "input", "input directory or comma-separated files");
    t.add(cmd, "--scene", "scene", "synthetic scene name");
    t.add(cmd, "--frames", "frames", "synthetic frame count");
    t.add(cmd, "--noise", "noise", "synthetic range noise sigma (m)");
    t.add(cmd, "--step-rotation", "step_rotation", "synthetic per-frame rotation (deg)");
    t.add(cmd, "--step-translation", "step_translation", "synthetic per-frame translation (m)");
    t.add(cmd, "--downsample", "downsample", "row and column down-sampling step");
    t.add(cmd, "--downsample-rows", "downsample_rows", "row down-sampling step");
    t.add(cmd, "--downsample-cols", "downsample_cols", "column down-sampling step");
    t.add(cmd, "--solver", "solver", "7L | 1L2P | 3L1P");
    t.add(cmd, "--hypotheses", "hypotheses", "RANSAC hypotheses per round");
    t.add(cmd, "--rounds", "rounds", "refinement rounds");
    t.add(cmd, "--candidate-dist", "candidate_dist", "candidate pair distance (m)");
    t.add(cmd, "--plane-angle-max", "plane_angle_max", "plane pair angle (deg)");
    t.add(cmd, "--inlier-dist", "inlier_dist", "inlier distance (m)");
    t.add(cmd, "--ap-epsilon", "ap_epsilon", "alternating projection stop threshold (m)");
    t.add(cmd, "--ap-max-iters", "ap_max_iters", "alternating projection sweep limit");
    t.add(cmd, "--feature-inlier-dist", "feature_inlier_dist", "line/plane fitting inlier distance (m)");
    t.add(cmd, "--seed", "seed", "random seed");
    t.add(cmd, "--threads", "threads", "worker threads (0 = all cores)");
    t.add(cmd, "--out", "out", "output directory");
}

KeyValueConfig merge(const std::string &config_path, const FlagTable &flags) {
    KeyValueConfig kv = config_path.empty() ? KeyValueConfig{} : KeyValueConfig::from_file(config_path);
    // Relative inputs named in a config file are relative to that file.
    if (const auto in = kv.get("input"); in && !config_path.empty()) {
        const fs::path base = fs::path(config_path).parent_path();
        std::stringstream ss(*in);
        std::string item, joined;
        while (std::getline(ss, item, ',')) {
            const fs::path p(item);
            joined += (joined.empty() ? "" : ",") + (p.is_absolute() ? p : base / p).lexically_normal().string();
        }
        kv.set("input", joined);
    }
    flags.apply(kv);
    return kv;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Line-intersection registration of organized 3D scans"};
    app.require_subcommand(1);

    std::string config_path;
    FlagTable reg_flags, fit_flags, synth_flags;

    auto *reg = app.add_subcommand("register", "register a scan sequence and write its trajectory");
    reg->add_option("--config", config_path, "key = value config file (flags override it)");
    add_run_flags(*reg, reg_flags);

    auto *fit = app.add_subcommand("fit", "dump fitted lines and planes of one scan");
    fit->add_option("--config", config_path, "key = value config file (flags override it)");
    add_run_flags(*fit, fit_flags);

    auto *synth = app.add_subcommand("synth", "raycast a named scene into scan files");
    synth->add_option("--config", config_path, "key = value config file (flags override it)");
    synth_flags.add(*synth, "--scene", "scene", "corridor | box_room | street");
    synth_flags.add(*synth, "--frames", "frames", "number of frames");
    synth_flags.add(*synth, "--noise", "noise", "range noise sigma (m)");
    synth_flags.add(*synth, "--seed", "seed", "noise seed");
    synth_flags.add(*synth, "--step-rotation", "step_rotation", "per-frame rotation (deg)");
    synth_flags.add(*synth, "--step-translation", "step_translation", "per-frame translation (m)");
    synth_flags.add(*synth, "--out", "out", "output directory");

    auto *eval = app.add_subcommand("eval", "compare an estimated trajectory with ground truth");
    std::string est_path, gt_path, csv_path;
    bool rpe = false, segments = false;
    double scale = 1.0;
    std::size_t step = 1;
    eval->add_option("--est", est_path, "estimated trajectory (TUM or KITTI)")->required();
    eval->add_option("--gt", gt_path, "ground-truth trajectory (TUM or KITTI)")->required();
    eval->add_flag("--rpe", rpe, "relative pose error (default)");
    eval->add_flag("--segments", segments, "KITTI-style segment errors");
    eval->add_option("--segment-scale", scale, "scale of the 100..800 m segment lengths");
    eval->add_option("--segment-step", step, "start-frame stride for segment errors");
    eval->add_option("--csv", csv_path, "write metrics as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*reg)
            return cmd_register(resolve(merge(config_path, reg_flags)));
        if (*fit)
            return cmd_fit(resolve(merge(config_path, fit_flags)));
        if (*synth)
            return cmd_synth(merge(config_path, synth_flags));
        if (*eval)
            return cmd_eval(est_path, gt_path, rpe, segments, scale, step, csv_path);
    } catch (const InvalidInput &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const IoError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const fs::filesystem_error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitUsage;
}
