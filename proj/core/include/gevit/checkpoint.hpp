#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gevit/tensor.hpp"

namespace gevit {

struct TensorRecord {
    std::string name;
    std::vector<int> shape;
    std::vector<float> data;  // little-endian f32 on disk
};

// Container format: magic "GEVT", u32 version, u32 record count, then per
// record: u32 name length + bytes, u32 rank, u32 dims..., f32 payload.
void save_checkpoint(const std::string& path, const std::vector<TensorRecord>& records);
std::vector<TensorRecord> load_checkpoint(const std::string& path);

template <class T>
std::vector<TensorRecord> snapshot_params(const std::vector<std::pair<std::string, Tensor<T>>>& ps) {
    std::vector<TensorRecord> out;
    for (const auto& [name, t] : ps) {
        TensorRecord r;
        r.name = name;
        r.shape = t.shape();
        r.data.reserve(t.numel());
        for (T v : t.value()) r.data.push_back(static_cast<float>(v));
        out.push_back(std::move(r));
    }
    return out;
}

template <class T>
void restore_params(std::vector<std::pair<std::string, Tensor<T>>>& ps,
                    const std::vector<TensorRecord>& records) {
    for (auto& [name, t] : ps) {
        const TensorRecord* found = nullptr;
        for (const auto& r : records)
            if (r.name == name) {
                found = &r;
                break;
            }
        if (!found) throw std::runtime_error("checkpoint is missing tensor '" + name + "'");
        if (found->shape != t.shape())
            throw std::runtime_error("checkpoint tensor '" + name + "' has shape " +
                                     shape_str(found->shape) + ", model expects " +
                                     shape_str(t.shape()));
        auto& val = t.mutable_value();
        for (size_t i = 0; i < val.size(); ++i) val[i] = static_cast<T>(found->data[i]);
    }
}

}  // namespace gevit
