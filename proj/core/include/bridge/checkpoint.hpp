#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bridge/policy.hpp"
#include "bridge/tensor.hpp"

namespace bridge {

// Precision-tagged snapshot of a policy. Values are held as doubles, which is
// exact for f32 parameters, so either precision round-trips bitwise.
struct CheckpointData {
    int format_version = 1;
    PolicyConfig config;
    PolicyRole role = PolicyRole::Current;
    std::string precision;  // "f32" | "f64"
    std::vector<std::pair<std::string, Tensor<double>>> params;
};

void save_checkpoint(const CheckpointData& data, const std::string& path);
CheckpointData load_checkpoint(const std::string& path);

namespace detail {
template <typename S>
constexpr const char* precision_tag() {
    return sizeof(S) == 4 ? "f32" : "f64";
}
}  // namespace detail

template <typename S>
CheckpointData to_checkpoint(Policy<S>& policy) {
    CheckpointData data;
    data.config = policy.config;
    data.role = policy.role;
    data.precision = detail::precision_tag<S>();
    for (auto& [name, t] : policy.named_parameters()) {
        Tensor<double> copy(t->shape);
        for (std::size_t i = 0; i < t->size(); ++i)
            copy[i] = static_cast<double>((*t)[i]);
        data.params.emplace_back(name, std::move(copy));
    }
    return data;
}

template <typename S>
Policy<S> from_checkpoint(const CheckpointData& data) {
    if (data.precision != detail::precision_tag<S>())
        throw ConfigError("checkpoint precision " + data.precision +
                          " does not match requested scalar type");
    Policy<S> policy = init_policy<S>(data.config);
    policy.role = data.role;
    auto named = policy.named_parameters();
    if (named.size() != data.params.size())
        throw SchemaError("params", "checkpoint parameter count mismatch");
    for (std::size_t k = 0; k < named.size(); ++k) {
        const auto& [name, stored] = data.params[k];
        if (name != named[k].first)
            throw SchemaError(name, "unexpected parameter name, wanted " + named[k].first);
        Tensor<S>& dst = *named[k].second;
        if (stored.shape != dst.shape)
            throw DimensionError("checkpoint parameter " + name + " has wrong shape");
        for (std::size_t i = 0; i < stored.size(); ++i)
            dst[i] = static_cast<S>(stored[i]);
    }
    return policy;
}

}  // namespace bridge
