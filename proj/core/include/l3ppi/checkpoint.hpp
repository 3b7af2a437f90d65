#pragma once

#include <string>
#include <utility>
#include <vector>

#include "l3ppi/tensor.hpp"

namespace l3ppi {

// Single-file parameter container: magic + version, a JSON manifest of
// hyperparameters, then a shape table with little-endian doubles.
struct Checkpoint {
    std::string manifest_json;
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor& tensor(const std::string& name) const;  // DataError when absent
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace l3ppi
