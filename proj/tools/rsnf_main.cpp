// Command-line front end. Links only the C API: the kernel stays behind the
// shared-library boundary.
#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rsnf/rsnf.h"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& command, const std::string& problem_path, const std::string& out_dir,
        const std::string& format, int order, int precision, double tol,
        const std::vector<std::string>& sets) {
  if (precision > 0 && rsnf_set_precision(precision) != RSNF_OK) {
    std::cerr << "unsupported precision " << precision << " (binary64 carries 53 bits)\n";
    return 2;
  }
  std::string request = "{}";
  if (!problem_path.empty()) request = read_file(problem_path);

  // fold --order/--tol and repeated --set key=value pairs into options
  std::string patched = request;
  {
    // tiny textual merge: parse, adjust, re-dump through the kernel validate?
    // The kernel owns JSON parsing; here we only splice options via a wrapper
    // document when flags are present.
    std::ostringstream opts;
    opts << "{";
    bool first = true;
    auto add = [&](const std::string& k, const std::string& v, bool quote) {
      opts << (first ? "" : ",") << "\"" << k << "\":" << (quote ? "\"" + v + "\"" : v);
      first = false;
    };
    if (order > 0) add("order", std::to_string(order), false);
    if (tol > 0) add("tol", std::to_string(tol), false);
    for (const auto& kv : sets) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::cerr << "--set expects key=value, got " << kv << "\n";
        return 2;
      }
      std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
      bool numeric = !val.empty() && (std::isdigit(val[0]) || val[0] == '-' || val[0] == '.');
      add(key, val, !numeric);
    }
    opts << "}";
    if (opts.str() != "{}") {
      // splice: {"..original..} -> the kernel merges request.options itself,
      // so wrap: {"request": original, "options_patch": {...}} is avoided by
      // a plain text merge on the top-level "options" key
      std::string o = opts.str();
      auto pos = patched.rfind('}');
      if (pos == std::string::npos) {
        std::cerr << "problem file is not a JSON object\n";
        return 2;
      }
      std::string key = "\"options\"";
      if (patched.find(key) == std::string::npos) {
        patched.insert(pos, std::string(",\"options\":") + o);
      } else {
        std::cerr << "flags and an explicit options object were both given; "
                     "put everything in the problem file or use flags only\n";
        return 2;
      }
    }
  }

  rsnf_result* res = nullptr;
  rsnf_status st = rsnf_run(command.c_str(), patched.c_str(), &res);
  std::string body = res ? rsnf_result_json(res) : "{}";

  if (format == "json" || st != RSNF_OK) {
    std::cout << body << "\n";
  }
  if (st == RSNF_OK && !out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    {
      std::ofstream out(out_dir + "/" + command + ".json");
      out << body << "\n";
    }
    for (int i = 0; i < rsnf_result_artifact_count(res); ++i) {
      std::string name = rsnf_result_artifact_name(res, i);
      std::ofstream out(out_dir + "/" + name);
      out << rsnf_result_artifact_body(res, i);
    }
  } else if (st == RSNF_OK && format != "json") {
    // csv/svg to stdout when a single artifact of that type exists
    for (int i = 0; i < rsnf_result_artifact_count(res); ++i) {
      std::string name = rsnf_result_artifact_name(res, i);
      if ((format == "csv" && name.size() > 4 && name.substr(name.size() - 4) == ".csv") ||
          (format == "svg" && name.size() > 4 && name.substr(name.size() - 4) == ".svg"))
        std::cout << rsnf_result_artifact_body(res, i);
    }
  }
  rsnf_result_free(res);
  switch (st) {
    case RSNF_OK:
      return 0;
    case RSNF_EMATH:
      return 1;
    default:
      return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ramis-Sibuya normal forms and parabolic stable manifolds"};
  app.require_subcommand(1);

  std::string problem, out_dir, format = "json";
  int order = 0;
  int precision = 0;
  double tol = 0;
  std::vector<std::string> sets;

  const char* env_prec = std::getenv("RSNF_PRECISION");
  if (env_prec != nullptr) precision = std::atoi(env_prec);

  std::vector<std::string> names = {"validate",  "exp",     "log",    "infgen",
                                    "blowup",    "reduce-linear", "verify-certificate",
                                    "reduce",    "classify", "stable", "orbit", "report"};
  for (const auto& name : names) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("problem", problem, "problem JSON file")->required();
    sub->add_option("--out", out_dir, "directory for result JSON and artifacts");
    sub->add_option("--format", format, "json|csv|svg")->check(CLI::IsMember({"json", "csv", "svg"}));
    sub->add_option("--order", order, "truncation order override");
    sub->add_option("--precision", precision, "float mantissa bits (53)");
    sub->add_option("--tol", tol, "solver tolerance");
    sub->add_option("--set", sets, "extra option key=value (repeatable)");
  }

  CLI11_PARSE(app, argc, argv);
  std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, problem, out_dir, format, order, precision, tol, sets);
  } catch (const std::exception& e) {
    std::cerr << "{\"error\": \"" << e.what() << "\"}\n";
    return 2;
  }
}
