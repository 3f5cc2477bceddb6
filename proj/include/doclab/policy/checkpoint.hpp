// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_POLICY_CHECKPOINT_HPP_
#define DOCLAB_POLICY_CHECKPOINT_HPP_

#include <bit>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "doclab/policy/config.hpp"
#include "doclab/policy/param_store.hpp"
#include "doclab/util/io.hpp"
#include "doclab/util/sha256.hpp"

namespace doclab::policy {

// Checkpoint archive: an 8-byte little-endian header length, a JSON header
// (format version, PolicyConfig, tensor directory with byte offsets), then
// the raw little-endian tensor blobs in directory order.
//
// kind == "full" stores every tensor. kind == "adapters" stores only the
// adapter pairs plus the SHA-256 of the full base archive they extend.
inline constexpr int kCheckpointFormatVersion = 1;

namespace detail {

template <class Real>
const char* dtype_name() {
    if constexpr (sizeof(Real) == 4) return "f32";
    else return "f64";
}

inline void append_u64_le(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline uint64_t read_u64_le(const std::string& s, size_t at) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(s[at + i])) << (8 * i);
    return v;
}

template <class Real>
void append_blob(std::string& out, const std::vector<Real>& data) {
    static_assert(std::endian::native == std::endian::little,
                  "checkpoint blobs assume a little-endian host");
    const char* p = reinterpret_cast<const char*>(data.data());
    out.append(p, data.size() * sizeof(Real));
}

}  // namespace detail

template <class Real>
struct LoadedCheckpoint {
    PolicyConfig config;
    ParamStore<Real> store;  // populated for full archives
    std::string kind;        // "full" or "adapters"
    std::string base_hash;   // only for adapter archives
    // Raw tensors of an adapter-only archive, keyed by directory name.
    std::vector<std::pair<std::string, Tensor<Real>>> adapter_tensors;
};

template <class Real>
std::string serialize_checkpoint(const ParamStore<Real>& store, const PolicyConfig& cfg,
                                 const std::string& kind, const std::string& base_hash = "") {
    if (kind != "full" && kind != "adapters") throw UsageError("unknown checkpoint kind: " + kind);
    nlohmann::json header;
    header["format_version"] = kCheckpointFormatVersion;
    header["kind"] = kind;
    header["config"] = cfg.to_json();
    if (kind == "adapters") {
        if (base_hash.empty())
            throw UsageError("adapter checkpoints require the base archive hash");
        header["base_hash"] = base_hash;
    }

    // Directory and blob section, in deterministic store order.
    std::string blobs;
    nlohmann::json dir = nlohmann::json::array();
    auto push_tensor = [&](const std::string& name, const Tensor<Real>& t) {
        nlohmann::json e;
        e["name"] = name;
        e["dtype"] = detail::dtype_name<Real>();
        e["shape"] = t.shape;
        e["offset"] = blobs.size();
        dir.push_back(e);
        detail::append_blob(blobs, t.data);
    };
    for (const auto& name : store.names()) {
        const auto& entry = store.entry(name);
        if (kind == "full") push_tensor(name, *entry.weight);
        if (entry.adapter) {
            push_tensor(name + ".lora_A", *entry.adapter->A);
            push_tensor(name + ".lora_B", *entry.adapter->B);
        }
    }
    header["tensors"] = dir;

    const std::string header_text = header.dump();
    std::string out;
    detail::append_u64_le(out, header_text.size());
    out += header_text;
    out += blobs;
    return out;
}

template <class Real>
void save_checkpoint(const ParamStore<Real>& store, const PolicyConfig& cfg,
                     const std::string& path, const std::string& kind = "full",
                     const std::string& base_hash = "") {
    write_file(path, serialize_checkpoint(store, cfg, kind, base_hash));
}

// Loads a full archive. Adapter tensors present in the archive are attached
// with the scale implied by the stored config.
template <class Real>
LoadedCheckpoint<Real> load_checkpoint(const std::string& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() < 8) throw IntegrityError("checkpoint too small: " + path);
    const uint64_t header_len = detail::read_u64_le(bytes, 0);
    if (8 + header_len > bytes.size()) throw IntegrityError("corrupt checkpoint header: " + path);
    nlohmann::json header = nlohmann::json::parse(bytes.substr(8, header_len));
    if (header.at("format_version").get<int>() != kCheckpointFormatVersion)
        throw IntegrityError("unsupported checkpoint format version");

    LoadedCheckpoint<Real> out;
    out.kind = header.at("kind").get<std::string>();
    out.config = PolicyConfig::from_json(header.at("config"));
    if (header.contains("base_hash")) out.base_hash = header.at("base_hash").get<std::string>();

    const size_t blob_base = 8 + header_len;
    struct RawTensor {
        std::string name;
        Tensor<Real> tensor;
    };
    std::vector<RawTensor> raw;
    for (const auto& e : header.at("tensors")) {
        const std::string name = e.at("name").get<std::string>();
        const std::string dtype = e.at("dtype").get<std::string>();
        if (dtype != detail::dtype_name<Real>())
            throw IntegrityError("checkpoint dtype " + dtype + " does not match build dtype");
        std::vector<int64_t> shape = e.at("shape").get<std::vector<int64_t>>();
        const uint64_t offset = e.at("offset").get<uint64_t>();
        Tensor<Real> t(shape);
        const size_t nbytes = t.data.size() * sizeof(Real);
        if (blob_base + offset + nbytes > bytes.size())
            throw IntegrityError("checkpoint blob out of range for tensor " + name);
        std::memcpy(t.data.data(), bytes.data() + blob_base + offset, nbytes);
        raw.push_back({name, std::move(t)});
    }

    if (out.kind == "adapters") {
        for (auto& r : raw) out.adapter_tensors.emplace_back(r.name, std::move(r.tensor));
        return out;
    }

    // Base weights first (directory order), then adapter pairs attach.
    for (auto& r : raw) {
        if (r.name.ends_with(".lora_A") || r.name.ends_with(".lora_B")) continue;
        out.store.add(r.name, std::move(r.tensor));
    }
    for (auto& r : raw) {
        if (!r.name.ends_with(".lora_A")) continue;
        const std::string base = r.name.substr(0, r.name.size() - 7);
        if (!out.store.has(base))
            throw IntegrityError("adapter references missing base weight: " + base);
        Tensor<Real>* b_tensor = nullptr;
        for (auto& rb : raw)
            if (rb.name == base + ".lora_B") b_tensor = &rb.tensor;
        if (!b_tensor) throw IntegrityError("adapter pair incomplete for " + base);
        AdapterPair<Real> pair;
        pair.A = std::make_shared<Tensor<Real>>(std::move(r.tensor));
        pair.B = std::make_shared<Tensor<Real>>(std::move(*b_tensor));
        pair.enabled = true;
        pair.scale = static_cast<Real>(out.config.lora_scale());
        out.store.entry(base).adapter = std::move(pair);
    }
    return out;
}

// Loads an adapter-only archive on top of its base archive, verifying the
// recorded content hash of the base file first.
template <class Real>
LoadedCheckpoint<Real> load_adapter_checkpoint(const std::string& adapter_path,
                                               const std::string& base_path) {
    LoadedCheckpoint<Real> adapters = load_checkpoint<Real>(adapter_path);
    if (adapters.kind != "adapters")
        throw IntegrityError("not an adapter checkpoint: " + adapter_path);
    const std::string actual = file_sha256(base_path);
    if (actual != adapters.base_hash)
        throw IntegrityError("base checkpoint hash mismatch: expected " + adapters.base_hash +
                             ", found " + actual);
    LoadedCheckpoint<Real> out = load_checkpoint<Real>(base_path);
    if (out.kind != "full") throw IntegrityError("base archive must be a full checkpoint");
    for (auto& [name, tensor] : adapters.adapter_tensors) {
        if (!name.ends_with(".lora_A")) continue;
        const std::string base = name.substr(0, name.size() - 7);
        if (!out.store.has(base))
            throw IntegrityError("adapter references missing base weight: " + base);
        Tensor<Real>* b_tensor = nullptr;
        for (auto& [bn, bt] : adapters.adapter_tensors)
            if (bn == base + ".lora_B") b_tensor = &bt;
        if (!b_tensor) throw IntegrityError("adapter pair incomplete for " + base);
        AdapterPair<Real> pair;
        pair.A = std::make_shared<Tensor<Real>>(tensor);
        pair.B = std::make_shared<Tensor<Real>>(*b_tensor);
        pair.enabled = true;
        pair.scale = static_cast<Real>(adapters.config.lora_scale());
        out.store.entry(base).adapter = std::move(pair);
    }
    out.kind = "full";
    return out;
}

}  // namespace doclab::policy

#endif  // DOCLAB_POLICY_CHECKPOINT_HPP_
