#include <bbm/harness/records.hpp>

#include <fmt/format.h>

#include <cmath>
#include <stdexcept>

namespace bbm::harness {

const Observable* ReplicateResult::find(const std::string& name) const {
    for (const auto& o : observables)
        if (o.name == name) return &o;
    return nullptr;
}

namespace {

void write_real(double x, std::string& out) {
    if (!std::isfinite(x)) {
        out += "null";
        return;
    }
    std::string s = fmt::format("{:.17g}", x);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    out += s;
}

void write(const nlohmann::ordered_json& j, std::string& out) {
    using value_t = nlohmann::ordered_json::value_t;
    switch (j.type()) {
        case value_t::object: {
            out += '{';
            bool first = true;
            for (const auto& [key, value] : j.items()) {
                if (!first) out += ',';
                first = false;
                out += nlohmann::ordered_json(key).dump();
                out += ':';
                write(value, out);
            }
            out += '}';
            break;
        }
        case value_t::array: {
            out += '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ',';
                write(j[i], out);
            }
            out += ']';
            break;
        }
        case value_t::number_float: write_real(j.get<double>(), out); break;
        default: out += j.dump(); break;
    }
}

}  // namespace

std::string dump_json(const nlohmann::ordered_json& j) {
    std::string out;
    write(j, out);
    return out;
}

std::string to_json_line(const ReplicateResult& r, bool timings) {
    nlohmann::ordered_json j;
    j["replicate_index"] = r.replicate_index;
    j["seed_used"] = r.seed_used;
    j["config_digest"] = r.config_digest;
    j["truncated"] = r.truncated;
    nlohmann::ordered_json obs = nlohmann::ordered_json::object();
    for (const auto& o : r.observables) {
        nlohmann::ordered_json v;
        if (o.value) v["value"] = *o.value;
        else v["value"] = nullptr;
        v["censored"] = o.censored;
        obs[o.name] = std::move(v);
    }
    j["observables"] = std::move(obs);
    if (timings) j["wall_time_ms"] = r.wall_time_ms;
    return dump_json(j);
}

ReplicateResult parse_json_line(const std::string& line) {
    const auto j = nlohmann::ordered_json::parse(line);
    ReplicateResult r;
    try {
        r.replicate_index = j.at("replicate_index").get<std::size_t>();
        r.seed_used = j.at("seed_used").get<std::uint64_t>();
        r.config_digest = j.at("config_digest").get<std::string>();
        r.truncated = j.at("truncated").get<bool>();
        for (const auto& [name, v] : j.at("observables").items()) {
            Observable o{name, std::nullopt, v.at("censored").get<bool>()};
            if (!v.at("value").is_null()) o.value = v.at("value").get<double>();
            r.observables.push_back(std::move(o));
        }
        if (j.contains("wall_time_ms")) r.wall_time_ms = j.at("wall_time_ms").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("malformed record: ") + e.what());
    }
    return r;
}

}  // namespace bbm::harness
