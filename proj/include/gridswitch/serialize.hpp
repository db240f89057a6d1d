#pragma once

#include "gridswitch/checkpoint.hpp"
#include "gridswitch/neuralnet.hpp"
#include "gridswitch/replay.hpp"

#include <string>
#include <vector>

namespace gridswitch {

void put_layers(Checkpoint& ckpt, const std::string& prefix,
                const std::vector<const LayerParams*>& layers);
void get_layers(const Checkpoint& ckpt, const std::string& prefix,
                const std::vector<LayerParams*>& layers);

void put_adam(Checkpoint& ckpt, const std::string& prefix, const AdamState& state);
void get_adam(const Checkpoint& ckpt, const std::string& prefix, AdamState& state);

void put_scalar_adam(Checkpoint& ckpt, const std::string& prefix, const ScalarAdam& s);
void get_scalar_adam(const Checkpoint& ckpt, const std::string& prefix, ScalarAdam& s);

void put_stats(Checkpoint& ckpt, const std::string& prefix, const RunningStats& stats);
void get_stats(const Checkpoint& ckpt, const std::string& prefix, RunningStats& stats);

} // namespace gridswitch
