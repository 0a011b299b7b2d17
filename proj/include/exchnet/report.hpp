#ifndef EXCHNET_REPORT_HPP
#define EXCHNET_REPORT_HPP

#include <cstdint>
#include <string>

#include "exchnet/dataset.hpp"
#include "exchnet/inference.hpp"
#include "exchnet/pml.hpp"

namespace exchnet {

/// Fit + inference report as a JSON document: mode, alpha, convergence
/// diagnostics, J, L, vcov, per-coefficient intervals, eta, warnings.
std::string inference_report_json(const RelationalDataset& data, const FitResult& fit,
                                  const InferenceResult& inference);

/// Write-temp-then-rename in the target directory; partially written files
/// are never observable at `path`.
void write_file_atomic(const std::string& path, const std::string& content);

/// FNV-1a over the bytes, for config fingerprints in run manifests.
std::uint64_t fnv1a_hash(const std::string& text);

/// Run manifest: version, subcommand, config hash, seed, wall seconds.
std::string run_manifest_json(const std::string& subcommand, std::uint64_t config_hash,
                              std::uint64_t seed, double wall_seconds);

} // namespace exchnet

#endif
