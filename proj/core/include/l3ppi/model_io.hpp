#pragma once

#include <string>

#include "l3ppi/prompt.hpp"

namespace l3ppi {

// Surrogate checkpoint: gin/head tensors plus a manifest describing the
// architecture, so loading rebuilds the exact model.
void save_surrogate(const std::string& path, const SurrogateModel& model,
                    const std::string& extra_manifest_json = "{}");
SurrogateModel load_surrogate(const std::string& path);

// Trained head bundle: frozen surrogate, prompt bank, gating network and a
// config manifest in one container.
void save_prompt_model(const std::string& path, const PromptModel& model,
                       const std::string& extra_manifest_json = "{}");
PromptModel load_prompt_model(const std::string& path);
std::string prompt_model_manifest(const std::string& path);

}  // namespace l3ppi
