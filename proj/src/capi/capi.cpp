#include "rsnf/rsnf.h"

#include <string>
#include <vector>

#include "core/engine.hpp"

using rsnf::json;

struct rsnf_result {
  std::string body;
  std::vector<rsnf::Artifact> artifacts;
};

extern "C" {

rsnf_status rsnf_run(const char* command, const char* request_json, rsnf_result** out) {
  if (out == nullptr) return RSNF_EINPUT;
  *out = nullptr;
  auto make = [&](json j, std::vector<rsnf::Artifact> arts = {}) {
    auto* r = new rsnf_result;
    r->body = j.dump(2);
    r->artifacts = std::move(arts);
    *out = r;
  };
  if (command == nullptr || request_json == nullptr) {
    make(json{{"error", "null command or request"}});
    return RSNF_EINPUT;
  }
  json request;
  try {
    request = json::parse(request_json);
  } catch (const std::exception& e) {
    make(json{{"error", std::string("request is not valid JSON: ") + e.what()}});
    return RSNF_EINPUT;
  }
  try {
    auto res = rsnf::run_command(command, request);
    make(std::move(res.body), std::move(res.artifacts));
    return RSNF_OK;
  } catch (const rsnf::InputError& e) {
    make(json{{"error", e.what()}, {"kind", "input"}});
    return RSNF_EINPUT;
  } catch (const json::exception& e) {
    make(json{{"error", e.what()}, {"kind", "input"}});
    return RSNF_EINPUT;
  } catch (const std::invalid_argument& e) {
    make(json{{"error", e.what()}, {"kind", "input"}});
    return RSNF_EINPUT;
  } catch (const std::domain_error& e) {
    make(json{{"error", e.what()}, {"kind", "math"}});
    return RSNF_EMATH;
  } catch (const std::exception& e) {
    make(json{{"error", e.what()}, {"kind", "internal"}});
    return RSNF_EINTERNAL;
  }
}

const char* rsnf_result_json(const rsnf_result* r) {
  return r == nullptr ? "" : r->body.c_str();
}

int rsnf_result_artifact_count(const rsnf_result* r) {
  return r == nullptr ? 0 : static_cast<int>(r->artifacts.size());
}

const char* rsnf_result_artifact_name(const rsnf_result* r, int index) {
  if (r == nullptr || index < 0 || index >= static_cast<int>(r->artifacts.size())) return "";
  return r->artifacts[index].name.c_str();
}

const char* rsnf_result_artifact_mime(const rsnf_result* r, int index) {
  if (r == nullptr || index < 0 || index >= static_cast<int>(r->artifacts.size())) return "";
  return r->artifacts[index].mime.c_str();
}

const char* rsnf_result_artifact_body(const rsnf_result* r, int index) {
  if (r == nullptr || index < 0 || index >= static_cast<int>(r->artifacts.size())) return "";
  return r->artifacts[index].body.c_str();
}

void rsnf_result_free(rsnf_result* r) { delete r; }

int rsnf_get_precision(void) { return rsnf::float_precision_bits(); }

rsnf_status rsnf_set_precision(int bits) {
  try {
    rsnf::set_float_precision_bits(bits);
    return RSNF_OK;
  } catch (const std::exception&) {
    return RSNF_EINPUT;
  }
}

const char* rsnf_version(void) { return "0.1.0"; }

}  // extern "C"
