#include "exchnet/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include <json.hpp>

#include "exchnet/error.hpp"

namespace exchnet {

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

} // namespace

std::string inference_report_json(const RelationalDataset& data, const FitResult& fit,
                                  const InferenceResult& inference) {
    nlohmann::json j;
    j["n_nodes"] = data.n_nodes();
    j["n_dyads"] = data.n_dyads();
    j["mode"] = inference_mode_name(inference.mode);
    j["alpha"] = inference.alpha;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["objective"] = fit.objective;
    j["gradient_max_norm"] = fit.gradient_max_norm;

    nlohmann::json coefs = nlohmann::json::array();
    for (const auto& c : inference.coefficients) {
        coefs.push_back({{"name", c.name},
                         {"estimate", c.estimate},
                         {"se", c.se},
                         {"ci_lo", c.ci_lo},
                         {"ci_hi", c.ci_hi}});
    }
    j["coefficients"] = coefs;

    j["eta"] = {inference.eta_used[0], inference.eta_used[1], inference.eta_used[2],
                inference.eta_used[3], inference.eta_used[4]};
    if (inference.eta_estimate) {
        const EtaEstimate& e = *inference.eta_estimate;
        nlohmann::json est;
        est["shorth_branch"] = e.shorth_branch;
        est["naive_eta1"] = e.naive_eta1;
        if (e.tuned_c) est["tuned_c"] = *e.tuned_c;
        est["psd_correction"] = e.psd_correction;
        j["eta_estimate"] = est;
    }

    j["J"] = matrix_to_json(inference.J_hat);
    j["L"] = matrix_to_json(inference.L_hat);
    j["vcov"] = matrix_to_json(inference.vcov);

    nlohmann::json warnings = nlohmann::json::array();
    for (const auto& w : fit.warnings) warnings.push_back(w);
    for (const auto& w : inference.warnings) warnings.push_back(w);
    j["warnings"] = warnings;
    return j.dump(2) + "\n";
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path dir = target.parent_path();
    if (dir.empty()) dir = ".";
    fs::path tmp = dir / (target.filename().string() + ".tmp." + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw data_error("cannot open '" + tmp.string() + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw data_error("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw data_error("cannot rename temporary file onto '" + path + "': " + ec.message());
    }
}

std::uint64_t fnv1a_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string run_manifest_json(const std::string& subcommand, std::uint64_t config_hash,
                              std::uint64_t seed, double wall_seconds) {
    nlohmann::json j;
    j["version"] = "1.0.0";
    j["subcommand"] = subcommand;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["wall_seconds"] = wall_seconds;
    return j.dump(2) + "\n";
}

} // namespace exchnet
