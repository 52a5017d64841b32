#pragma once

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace poekl {

inline constexpr const char* kToolVersion = "poekl 1.0.0";

/// SHA-256 of a file's bytes, lowercase hex.
inline std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw std::runtime_error("EVP_MD_CTX_new failed");
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in.good()) {
        in.read(buf, sizeof buf);
        EVP_DigestUpdate(ctx, buf, static_cast<size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex(2 * len, '0');
    static const char* alphabet = "0123456789abcdef";
    for (unsigned int i = 0; i < len; ++i) {
        hex[2 * i] = alphabet[digest[i] >> 4];
        hex[2 * i + 1] = alphabet[digest[i] & 0xF];
    }
    return hex;
}

/// Artifact files covered by the manifest: every CSV in the package dir.
inline std::vector<std::string> manifest_targets(const std::filesystem::path& dir) {
    std::vector<std::string> names;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().extension() != ".csv") continue;
        names.push_back(std::filesystem::relative(entry.path(), dir).generic_string());
    }
    std::sort(names.begin(), names.end());
    return names;
}

/// Manifest timestamp; honors SOURCE_DATE_EPOCH so identical configs can
/// produce byte-identical packages.
inline std::string manifest_timestamp() {
    std::time_t t;
    if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"))
        t = static_cast<std::time_t>(std::strtoll(sde, nullptr, 10));
    else
        t = std::time(nullptr);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void write_manifest(const std::filesystem::path& dir, const nlohmann::json& config_echo,
                           const std::vector<uint64_t>& seeds) {
    nlohmann::json m;
    m["tool_version"] = kToolVersion;
    m["timestamp"] = manifest_timestamp();
    m["config"] = config_echo;
    m["seeds"] = seeds;
    nlohmann::json artifacts = nlohmann::json::object();
    for (const std::string& name : manifest_targets(dir))
        artifacts[name] = sha256_file(dir / name);
    m["artifacts"] = artifacts;
    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
    out << m.dump(2) << '\n';
}

struct ManifestCheck {
    bool ok = true;
    std::vector<std::string> problems;
};

/// Recomputes every hash and cross-checks the directory walk against the
/// manifest's artifact list in both directions.
inline ManifestCheck verify_manifest(const std::filesystem::path& dir) {
    ManifestCheck check;
    const auto mpath = dir / "manifest.json";
    std::ifstream in(mpath);
    if (!in) {
        check.ok = false;
        check.problems.push_back("missing manifest.json");
        return check;
    }
    nlohmann::json m;
    try {
        in >> m;
    } catch (const std::exception& e) {
        check.ok = false;
        check.problems.push_back(std::string("unparsable manifest: ") + e.what());
        return check;
    }
    const auto& artifacts = m.at("artifacts");
    std::vector<std::string> on_disk = manifest_targets(dir);
    for (const std::string& name : on_disk) {
        if (!artifacts.contains(name)) {
            check.ok = false;
            check.problems.push_back("file not listed in manifest: " + name);
            continue;
        }
        const std::string want = artifacts.at(name).get<std::string>();
        const std::string got = sha256_file(dir / name);
        if (want != got) {
            check.ok = false;
            check.problems.push_back("hash mismatch: " + name);
        }
    }
    for (const auto& [name, _] : artifacts.items())
        if (std::find(on_disk.begin(), on_disk.end(), name) == on_disk.end()) {
            check.ok = false;
            check.problems.push_back("listed file missing on disk: " + name);
        }
    return check;
}

} // namespace poekl
