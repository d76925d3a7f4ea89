#include "noddet/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "json.hpp"

#include "noddet/errors.hpp"

namespace fs = std::filesystem;

namespace noddet::eval {

namespace {

std::string rate_key(double rate) {
    std::ostringstream os;
    os << "sens_at_";
    if (rate == std::floor(rate))
        os << static_cast<int>(rate);
    else
        os << rate;
    return os.str();
}

std::string format_threshold(double t) {
    if (std::isinf(t)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", t);
    return buf;
}

void draw_froc_plot(const FrocCurve& curve, const std::string& path) {
    const int W = 720, H = 540;
    const int ml = 70, mr = 25, mt = 30, mb = 55;
    cv::Mat img(H, W, CV_8UC3, cv::Scalar(255, 255, 255));

    const double x_lo = std::log2(0.25), x_hi = std::log2(32.0);
    auto px = [&](double fp) {
        const double lx = std::log2(std::max(fp, 0.25));
        return ml + static_cast<int>((lx - x_lo) / (x_hi - x_lo) * (W - ml - mr));
    };
    auto py = [&](double sens) { return H - mb - static_cast<int>(sens * (H - mt - mb)); };

    const cv::Scalar axis(60, 60, 60), grid(220, 220, 220), line(160, 60, 20);
    for (double rate : kStandardFpRates) {
        cv::line(img, {px(rate), py(0)}, {px(rate), py(1)}, grid, 1);
        std::ostringstream lbl;
        lbl << rate;
        cv::putText(img, lbl.str(), {px(rate) - 10, H - mb + 22}, cv::FONT_HERSHEY_SIMPLEX, 0.45,
                    axis, 1, cv::LINE_AA);
    }
    for (int i = 0; i <= 10; i += 2) {
        const double s = i / 10.0;
        cv::line(img, {px(0.25), py(s)}, {px(32), py(s)}, grid, 1);
        char lbl[16];
        std::snprintf(lbl, sizeof(lbl), "%.1f", s);
        cv::putText(img, lbl, {ml - 45, py(s) + 5}, cv::FONT_HERSHEY_SIMPLEX, 0.45, axis, 1,
                    cv::LINE_AA);
    }
    cv::rectangle(img, {ml, mt}, {W - mr, H - mb}, axis, 1);
    cv::putText(img, "average FPs per scan", {W / 2 - 90, H - 12}, cv::FONT_HERSHEY_SIMPLEX, 0.5,
                axis, 1, cv::LINE_AA);
    cv::putText(img, "sensitivity", {8, 20}, cv::FONT_HERSHEY_SIMPLEX, 0.5, axis, 1, cv::LINE_AA);

    // staircase over finite-threshold points
    cv::Point prev(-1, -1);
    for (const FrocPoint& p : curve.points) {
        if (std::isinf(p.threshold)) continue;
        const cv::Point cur(px(p.avg_fp), py(p.sensitivity));
        if (prev.x >= 0) {
            cv::line(img, prev, {cur.x, prev.y}, line, 2);
            cv::line(img, {cur.x, prev.y}, cur, line, 2);
        }
        prev = cur;
    }
    if (prev.x >= 0) cv::line(img, prev, {px(32), prev.y}, line, 2);
    for (const auto& [rate, sens] : curve.sens_at)
        cv::circle(img, {px(rate), py(sens)}, 4, cv::Scalar(40, 40, 200), cv::FILLED);

    if (!cv::imwrite(path, img)) throw IoError("emit_report: cannot write plot " + path);
}

}  // namespace

void emit_report(const FrocCurve& curve, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    {
        std::ofstream csv(dir / "froc.csv", std::ios::trunc);
        if (!csv) throw IoError("emit_report: cannot write froc.csv under " + out_dir);
        csv << "threshold,avg_fp_per_scan,sensitivity\n";
        char buf[128];
        for (const FrocPoint& p : curve.points) {
            std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g", format_threshold(p.threshold).c_str(),
                          p.avg_fp, p.sensitivity);
            csv << buf << '\n';
        }
    }

    {
        nlohmann::json j;
        for (const auto& [rate, sens] : curve.sens_at) j[rate_key(rate)] = sens;
        j["average_froc"] = curve.average_froc;
        j["n_scans"] = curve.n_scans;
        j["n_gts"] = curve.n_gts;
        nlohmann::json pts = nlohmann::json::array();
        for (const FrocPoint& p : curve.points)
            pts.push_back({{"threshold", format_threshold(p.threshold)},
                           {"avg_fp", p.avg_fp},
                           {"sensitivity", p.sensitivity}});
        j["points"] = pts;
        std::ofstream js(dir / "summary.json", std::ios::trunc);
        if (!js) throw IoError("emit_report: cannot write summary.json under " + out_dir);
        js << j.dump(2) << '\n';
    }

    draw_froc_plot(curve, (dir / "froc.png").string());
}

FrocCurve load_summary(const std::string& summary_json_path) {
    std::ifstream in(summary_json_path);
    if (!in) throw IoError("load_summary: cannot open " + summary_json_path);
    nlohmann::json j;
    in >> j;
    FrocCurve curve;
    for (double rate : kStandardFpRates) curve.sens_at[rate] = j.at(rate_key(rate)).get<double>();
    curve.average_froc = j.at("average_froc").get<double>();
    curve.n_scans = j.at("n_scans").get<int>();
    curve.n_gts = j.at("n_gts").get<int>();
    for (const auto& p : j.at("points")) {
        FrocPoint fp;
        const std::string t = p.at("threshold").get<std::string>();
        fp.threshold = t == "inf" ? std::numeric_limits<double>::infinity() : std::stod(t);
        fp.avg_fp = p.at("avg_fp").get<double>();
        fp.sensitivity = p.at("sensitivity").get<double>();
        curve.points.push_back(fp);
    }
    return curve;
}

void write_overlay(const data::SliceStack& stack, const std::vector<Detection>& dets,
                   const std::vector<Box>& gts, const std::string& path, double iou_thr) {
    const int H = stack.height(), W = stack.width();
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double v = stack.pixels.at(1, y, x);  // key slice channel
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    const double span = hi > lo ? hi - lo : 1.0;
    cv::Mat gray(H, W, CV_8UC1);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            gray.at<std::uint8_t>(y, x) =
                static_cast<std::uint8_t>(255.0 * (stack.pixels.at(1, y, x) - lo) / span);
    cv::Mat img;
    cv::cvtColor(gray, img, cv::COLOR_GRAY2BGR);

    const cv::Scalar blue(255, 0, 0), green(0, 255, 0), red(0, 0, 255);
    for (const Box& b : gts)
        cv::rectangle(img, cv::Point2d(b.x1, b.y1), cv::Point2d(b.x2, b.y2), blue, 1);

    const MatchResult m = match_detections(dets, gts, iou_thr);
    for (std::size_t i = 0; i < dets.size(); ++i) {
        const Box& b = dets[i].box;
        const cv::Scalar& color = !gts.empty() && m.is_tp[i] ? green : red;
        cv::rectangle(img, cv::Point2d(b.x1, b.y1), cv::Point2d(b.x2, b.y2), color, 1);
        char conf[16];
        std::snprintf(conf, sizeof(conf), "%.2f", dets[i].confidence);
        cv::putText(img, conf, cv::Point2d(b.x1, std::max(8.0, b.y1 - 2.0)),
                    cv::FONT_HERSHEY_SIMPLEX, 0.3, color, 1, cv::LINE_AA);
    }
    if (!cv::imwrite(path, img)) throw IoError("write_overlay: cannot write " + path);
}

std::string format_sensitivity_table(const std::string& model_name, const FrocCurve& curve) {
    std::ostringstream os;
    char buf[192];
    os << "Sensitivity (%) at FPs per scan\n";
    std::snprintf(buf, sizeof(buf), "%-26s%7s%7s%7s%7s%7s%7s%9s\n", "Model", "0.5", "1", "2", "4",
                  "8", "16", "avg");
    os << buf;
    std::snprintf(buf, sizeof(buf), "%-26s", model_name.c_str());
    os << buf;
    for (double rate : kStandardFpRates) {
        std::snprintf(buf, sizeof(buf), "%7.1f", 100.0 * curve.sens_at.at(rate));
        os << buf;
    }
    std::snprintf(buf, sizeof(buf), "%9.1f\n", 100.0 * curve.average_froc);
    os << buf;
    return os.str();
}

}  // namespace noddet::eval
