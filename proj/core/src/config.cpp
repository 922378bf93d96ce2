#include "gevit/config.hpp"

#include <fstream>
#include <stdexcept>

namespace gevit {

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto strip = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            size_t b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        std::string t = strip(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
        kv[strip(t.substr(0, eq))] = strip(t.substr(eq + 1));
    }
    return kv;
}

ModelConfig apply_config(ModelConfig base, const std::map<std::string, std::string>& kv) {
    auto to_int = [](const std::string& k, const std::string& v) {
        try {
            return std::stoi(v);
        } catch (...) {
            throw std::runtime_error("config key " + k + ": expected integer, got '" + v + "'");
        }
    };
    auto to_double = [](const std::string& k, const std::string& v) {
        try {
            return std::stod(v);
        } catch (...) {
            throw std::runtime_error("config key " + k + ": expected number, got '" + v + "'");
        }
    };
    auto to_bool = [](const std::string& k, const std::string& v) {
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw std::runtime_error("config key " + k + ": expected boolean, got '" + v + "'");
    };
    for (const auto& [k, v] : kv) {
        if (k == "group") base.group = v;
        else if (k == "image_width") base.image_width = to_int(k, v);
        else if (k == "image_height") base.image_height = to_int(k, v);
        else if (k == "neighborhood") base.neighborhood = to_int(k, v);
        else if (k == "embed_dim") base.embed_dim = to_int(k, v);
        else if (k == "heads") base.heads = to_int(k, v);
        else if (k == "head_dim") base.head_dim = to_int(k, v);
        else if (k == "blocks") base.blocks = to_int(k, v);
        else if (k == "mlp_hidden") base.mlp_hidden = to_int(k, v);
        else if (k == "classes") base.classes = to_int(k, v);
        else if (k == "pe_hidden_width") base.pe_hidden_width = to_int(k, v);
        else if (k == "pe_share_heads") base.pe_share_heads = to_bool(k, v);
        else if (k == "pe_variant") {
            if (v == "gevit") base.pe_variant = PeVariant::gevit;
            else if (v == "baseline") base.pe_variant = PeVariant::baseline;
            else throw std::runtime_error("pe_variant must be gevit or baseline, got '" + v + "'");
        } else if (k == "attn_dropout") base.attn_dropout = to_double(k, v);
        else if (k == "value_dropout") base.value_dropout = to_double(k, v);
        else if (k == "boundary") {
            if (v == "torus") base.boundary = Boundary::torus;
            else if (v == "clamp") base.boundary = Boundary::clamp;
            else throw std::runtime_error("boundary must be torus or clamp, got '" + v + "'");
        } else if (k == "scale_scores") base.scale_scores = to_bool(k, v);
        else if (k == "input_mean") base.input_mean = to_double(k, v);
        else if (k == "input_scale") base.input_scale = to_double(k, v);
        else throw std::runtime_error("unknown config key '" + k + "'");
    }
    return base;
}

}  // namespace gevit
