#pragma once

#include <fstream>
#include <memory>
#include <unordered_map>
#include <vector>

#include "mandate/autodiff.hpp"

namespace mandate {

// Ordered collection of named parameters. Creation order is the checkpoint
// record order, so runs with the same architecture serialize identically.
class ParamStore {
public:
    Param& add(std::string name, Tensor init) {
        if (index_.count(name))
            throw UsageError("ParamStore: duplicate parameter '" + name + "'");
        items_.push_back(std::make_unique<Param>(name, std::move(init)));
        index_[items_.back()->name] = items_.back().get();
        return *items_.back();
    }

    Param& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end())
            throw UsageError("ParamStore: unknown parameter '" + name + "'");
        return *it->second;
    }
    const Param& at(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end())
            throw UsageError("ParamStore: unknown parameter '" + name + "'");
        return *it->second;
    }
    bool contains(const std::string& name) const { return index_.count(name) > 0; }

    std::size_t size() const { return items_.size(); }
    Param& item(std::size_t i) { return *items_[i]; }
    const Param& item(std::size_t i) const { return *items_[i]; }

    std::vector<Param*> pointers() {
        std::vector<Param*> out;
        out.reserve(items_.size());
        for (auto& p : items_) out.push_back(p.get());
        return out;
    }

    void zero_grads() {
        for (auto& p : items_) p->zero_grad();
    }

    std::size_t total_scalars() const {
        std::size_t n = 0;
        for (const auto& p : items_) n += p->value.numel();
        return n;
    }

    using Snapshot = std::vector<std::pair<std::string, Tensor>>;

    Snapshot snapshot() const {
        Snapshot s;
        s.reserve(items_.size());
        for (const auto& p : items_) s.emplace_back(p->name, p->value);
        return s;
    }

    void restore(const Snapshot& s) {
        for (const auto& [name, value] : s) {
            Param& p = at(name);
            if (!p.value.same_shape(value))
                throw UsageError("ParamStore::restore: shape mismatch for '" + name + "'");
            p.value = value;
        }
    }

private:
    std::vector<std::unique_ptr<Param>> items_;
    std::unordered_map<std::string, Param*> index_;
};

// --- checkpoint payload ------------------------------------------------------
// Records in creation order: name, rank, dims, raw little-endian doubles.
// Round-trips bit-exactly.

constexpr char kCheckpointMagic[8] = {'M', 'N', 'D', 'C', 'K', '0', '0', '1'};

inline void save_params(const ParamStore& store, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write(kCheckpointMagic, 8);
    const std::uint64_t count = store.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (std::size_t i = 0; i < store.size(); ++i) {
        const Param& p = store.item(i);
        const std::uint32_t name_len = static_cast<std::uint32_t>(p.name.size());
        out.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
        out.write(p.name.data(), name_len);
        const std::uint32_t rank = static_cast<std::uint32_t>(p.value.rank());
        out.write(reinterpret_cast<const char*>(&rank), sizeof(rank));
        for (std::size_t d : p.value.shape) {
            const std::uint64_t dim = d;
            out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
        }
        out.write(reinterpret_cast<const char*>(p.value.data.data()),
                  static_cast<std::streamsize>(p.value.data.size() * sizeof(double)));
    }
    if (!out) throw DataError("short write on checkpoint: " + path);
}

// Fills an existing store whose parameters were created from the manifest;
// names and shapes must line up exactly.
inline void load_params(ParamStore& store, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || !std::equal(magic, magic + 8, kCheckpointMagic))
        throw DataError("not a checkpoint file: " + path);
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (count != store.size())
        throw DataError("checkpoint holds " + std::to_string(count) +
                        " parameters, model expects " + std::to_string(store.size()));
    for (std::uint64_t rec = 0; rec < count; ++rec) {
        std::uint32_t name_len = 0;
        in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        std::uint32_t rank = 0;
        in.read(reinterpret_cast<char*>(&rank), sizeof(rank));
        std::vector<std::size_t> shape(rank);
        for (std::uint32_t d = 0; d < rank; ++d) {
            std::uint64_t dim = 0;
            in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
            shape[d] = dim;
        }
        if (!in) throw DataError("truncated checkpoint: " + path);
        Param& p = store.item(rec);
        if (p.name != name)
            throw DataError("checkpoint record '" + name + "' does not match expected '" +
                            p.name + "'");
        if (p.value.shape != shape)
            throw DataError("checkpoint shape mismatch for '" + name + "'");
        in.read(reinterpret_cast<char*>(p.value.data.data()),
                static_cast<std::streamsize>(p.value.data.size() * sizeof(double)));
        if (!in) throw DataError("truncated checkpoint: " + path);
    }
}

// Glorot-style uniform initialization for the weight matrices; biases and
// logits start at zero elsewhere.
inline Tensor glorot_init(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t({fan_in, fan_out});
    for (double& v : t.data) v = rng.uniform(-bound, bound);
    return t;
}

}  // namespace mandate
