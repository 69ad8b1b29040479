#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ngt/metrics.hpp"

namespace ngt {

namespace {

std::string format4(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

double parse_metric(const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::stod(s);
}

struct ManifestEntry {
    std::string pattern;
    double sigma = 0.0;
};

// Simulator sidecar: one "name pattern sigma seed" line per image.
std::map<std::string, ManifestEntry> read_manifest(const std::filesystem::path& dir) {
    std::map<std::string, ManifestEntry> entries;
    std::ifstream in(dir / "manifest.txt");
    if (!in) return entries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string name, pattern;
        double sigma = 0.0;
        if (row >> name >> pattern >> sigma) entries[name] = {pattern, sigma};
    }
    return entries;
}

const ManifestEntry* manifest_lookup(const std::map<std::string, ManifestEntry>& manifest,
                                     const std::string& filename) {
    for (const auto& [name, entry] : manifest) {
        if (filename == name + ".png" || filename == name + ".noisy.png" ||
            filename == name + ".clean.png")
            return &entry;
    }
    return nullptr;
}

}  // namespace

MetricRow MetricReport::aggregate() const {
    MetricRow mean;
    mean.image = "mean";
    if (rows.empty()) return mean;
    for (const auto& row : rows) {
        mean.psnr += row.psnr;
        mean.ssim += row.ssim;
        mean.delta_e += row.delta_e;
        mean.vifp += row.vifp;
        mean.mse += row.mse;
        mean.sigma += row.sigma;
    }
    const double n = static_cast<double>(rows.size());
    mean.psnr /= n;
    mean.ssim /= n;
    mean.delta_e /= n;
    mean.vifp /= n;
    mean.mse /= n;
    mean.sigma /= n;
    return mean;
}

void MetricReport::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << "image,pattern,sigma,psnr,ssim,delta_e,vifp,mse\n";
    auto emit = [&out](const MetricRow& row) {
        out << row.image << ',' << row.pattern << ',' << format4(row.sigma) << ','
            << format4(row.psnr) << ',' << format4(row.ssim) << ',' << format4(row.delta_e) << ','
            << format4(row.vifp) << ',' << format4(row.mse) << '\n';
    };
    for (const auto& row : rows) emit(row);
    emit(aggregate());
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

MetricReport MetricReport::read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open for reading");
    std::string line;
    if (!std::getline(in, line) || line != "image,pattern,sigma,psnr,ssim,delta_e,vifp,mse")
        throw std::runtime_error(path.string() + ": not a metric report (bad header)");
    MetricReport report;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        MetricRow r;
        std::getline(row, r.image, ',');
        std::getline(row, r.pattern, ',');
        std::getline(row, field, ',');
        r.sigma = parse_metric(field);
        std::getline(row, field, ',');
        r.psnr = parse_metric(field);
        std::getline(row, field, ',');
        r.ssim = parse_metric(field);
        std::getline(row, field, ',');
        r.delta_e = parse_metric(field);
        std::getline(row, field, ',');
        r.vifp = parse_metric(field);
        std::getline(row, field, ',');
        r.mse = parse_metric(field);
        if (r.image == "mean") continue;  // aggregate is derived, not stored
        report.rows.push_back(std::move(r));
    }
    return report;
}

MetricReport evaluate_dirs(const std::filesystem::path& ref_dir,
                           const std::filesystem::path& test_dir,
                           const std::optional<PairList>& pairing) {
    std::vector<std::pair<std::string, std::string>> pairs;
    if (pairing) {
        pairs = pairing->pairs;
    } else {
        const auto ref_files = list_pngs(ref_dir);
        const auto test_files = list_pngs(test_dir);
        std::vector<std::string> ref_names, test_names;
        for (const auto& p : ref_files) ref_names.push_back(p.filename().string());
        for (const auto& p : test_files) test_names.push_back(p.filename().string());
        std::vector<std::string> unmatched;
        for (const auto& name : ref_names)
            if (std::find(test_names.begin(), test_names.end(), name) == test_names.end())
                unmatched.push_back("ref:" + name);
        for (const auto& name : test_names)
            if (std::find(ref_names.begin(), ref_names.end(), name) == ref_names.end())
                unmatched.push_back("test:" + name);
        if (!unmatched.empty()) {
            std::string msg = "evaluate_dirs: unmatched files:";
            for (const auto& u : unmatched) msg += " " + u;
            throw std::runtime_error(msg);
        }
        for (const auto& name : ref_names) pairs.emplace_back(name, name);
    }
    if (pairs.empty()) throw std::runtime_error("evaluate_dirs: no image pairs to evaluate");

    const auto manifest = read_manifest(test_dir);
    MetricReport report;
    for (const auto& [ref_name, test_name] : pairs) {
        const Image ref = load_png(ref_dir / ref_name);
        const Image test = load_png(test_dir / test_name);
        MetricRow row = evaluate_pair(ref, test, test_name);
        if (const ManifestEntry* entry = manifest_lookup(manifest, test_name)) {
            row.pattern = entry->pattern;
            row.sigma = entry->sigma;
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace ngt
