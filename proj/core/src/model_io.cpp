#include "l3ppi/model_io.hpp"

#include "json.hpp"
#include "l3ppi/checkpoint.hpp"
#include "l3ppi/errors.hpp"

namespace l3ppi {

namespace {

void add_mlp(Checkpoint& ckpt, const std::string& prefix, const Mlp& mlp) {
    for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
        ckpt.tensors.emplace_back(prefix + "." + std::to_string(i) + ".w", mlp.layers[i].weight);
        ckpt.tensors.emplace_back(prefix + "." + std::to_string(i) + ".b", mlp.layers[i].bias);
    }
}

Mlp read_mlp(const Checkpoint& ckpt, const std::string& prefix, std::size_t n_layers) {
    Mlp mlp;
    for (std::size_t i = 0; i < n_layers; ++i) {
        LinearLayer layer;
        layer.weight = ckpt.tensor(prefix + "." + std::to_string(i) + ".w").detached_copy(true);
        layer.bias = ckpt.tensor(prefix + "." + std::to_string(i) + ".b").detached_copy(true);
        mlp.layers.push_back(std::move(layer));
    }
    return mlp;
}

nlohmann::json surrogate_manifest(const SurrogateModel& model) {
    nlohmann::json j;
    j["feature_dim"] = model.feature_dim;
    j["hidden"] = model.hidden;
    j["out_dim"] = model.out_dim;
    j["dropout"] = model.dropout;
    j["gin_layers"] = model.gin.layer_mlps.size();
    j["head_layers"] = model.head.layers.size();
    return j;
}

void add_surrogate_tensors(Checkpoint& ckpt, const SurrogateModel& model,
                           const std::string& prefix) {
    for (std::size_t l = 0; l < model.gin.layer_mlps.size(); ++l)
        add_mlp(ckpt, prefix + "gin." + std::to_string(l), model.gin.layer_mlps[l]);
    add_mlp(ckpt, prefix + "head", model.head);
}

SurrogateModel read_surrogate(const Checkpoint& ckpt, const nlohmann::json& manifest,
                              const std::string& prefix) {
    SurrogateModel model;
    model.feature_dim = manifest.at("feature_dim").get<int>();
    model.hidden = manifest.at("hidden").get<int>();
    model.out_dim = manifest.at("out_dim").get<int>();
    model.dropout = manifest.at("dropout").get<double>();
    const auto gin_layers = manifest.at("gin_layers").get<std::size_t>();
    const auto head_layers = manifest.at("head_layers").get<std::size_t>();
    for (std::size_t l = 0; l < gin_layers; ++l)
        model.gin.layer_mlps.push_back(read_mlp(ckpt, prefix + "gin." + std::to_string(l), 2));
    model.head = read_mlp(ckpt, prefix + "head", head_layers);
    return model;
}

}  // namespace

void save_surrogate(const std::string& path, const SurrogateModel& model,
                    const std::string& extra_manifest_json) {
    Checkpoint ckpt;
    nlohmann::json manifest;
    manifest["kind"] = "surrogate";
    manifest["surrogate"] = surrogate_manifest(model);
    manifest["extra"] = nlohmann::json::parse(extra_manifest_json);
    ckpt.manifest_json = manifest.dump(2);
    add_surrogate_tensors(ckpt, model, "");
    save_checkpoint(path, ckpt);
}

SurrogateModel load_surrogate(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    nlohmann::json manifest = nlohmann::json::parse(ckpt.manifest_json);
    if (manifest.at("kind").get<std::string>() != "surrogate")
        throw DataError("checkpoint is not a surrogate model: " + path);
    return read_surrogate(ckpt, manifest.at("surrogate"), "");
}

void save_prompt_model(const std::string& path, const PromptModel& model,
                       const std::string& extra_manifest_json) {
    Checkpoint ckpt;
    nlohmann::json manifest;
    manifest["kind"] = "prompt-model";
    manifest["surrogate"] = surrogate_manifest(model.surrogate);
    manifest["bank"] = {{"path_budget", model.bank.path_budget},
                        {"dim", model.bank.embeddings.cols()}};
    manifest["gating"] = {{"feature_dim", model.gating.feature_dim},
                          {"hidden", model.gating.hidden},
                          {"dropout", model.gating.dropout},
                          {"gin_layers", model.gating.gin.layer_mlps.size()},
                          {"head_layers", model.gating.head.layers.size()}};
    manifest["use_gating"] = model.use_gating;
    manifest["extra"] = nlohmann::json::parse(extra_manifest_json);
    ckpt.manifest_json = manifest.dump(2);

    add_surrogate_tensors(ckpt, model.surrogate, "surrogate.");
    ckpt.tensors.emplace_back("bank.embeddings", model.bank.embeddings);
    for (std::size_t l = 0; l < model.gating.gin.layer_mlps.size(); ++l)
        add_mlp(ckpt, "gating.gin." + std::to_string(l), model.gating.gin.layer_mlps[l]);
    add_mlp(ckpt, "gating.head", model.gating.head);
    save_checkpoint(path, ckpt);
}

PromptModel load_prompt_model(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    nlohmann::json manifest = nlohmann::json::parse(ckpt.manifest_json);
    if (manifest.at("kind").get<std::string>() != "prompt-model")
        throw DataError("checkpoint is not a prompt-model bundle: " + path);

    PromptModel model;
    model.surrogate = read_surrogate(ckpt, manifest.at("surrogate"), "surrogate.");
    model.bank.path_budget = manifest.at("bank").at("path_budget").get<int>();
    model.bank.embeddings = ckpt.tensor("bank.embeddings").detached_copy(true);
    const auto& g = manifest.at("gating");
    model.gating.feature_dim = g.at("feature_dim").get<int>();
    model.gating.hidden = g.at("hidden").get<int>();
    model.gating.dropout = g.at("dropout").get<double>();
    const auto gin_layers = g.at("gin_layers").get<std::size_t>();
    for (std::size_t l = 0; l < gin_layers; ++l)
        model.gating.gin.layer_mlps.push_back(
            read_mlp(ckpt, "gating.gin." + std::to_string(l), 2));
    model.gating.head = read_mlp(ckpt, "gating.head", g.at("head_layers").get<std::size_t>());
    model.use_gating = manifest.at("use_gating").get<bool>();
    return model;
}

std::string prompt_model_manifest(const std::string& path) {
    return load_checkpoint(path).manifest_json;
}

}  // namespace l3ppi
