#pragma once

// A miniature project history with planted vulnerability chains, merge and
// cosmetic noise, for exercising the full mining/training/evaluating path.

#include <memory>
#include <string>

#include "support/fixture_repo.hpp"

namespace jitvp::testing {

inline std::shared_ptr<GitFixture> build_e2e_repo(const std::string& name = "e2e") {
    auto repo = std::make_shared<GitFixture>(name);
    auto& r = *repo;
    constexpr long long t0 = 1577836800;  // 2020-01-01
    constexpr long long day = 86400;
    long long t = t0;

    r.write("core/parse.c", "int parse(char* in) {\n  return 0;\n}\n");
    r.commit("initial parser", t);

    r.write("core/parse.c", "int parse(char* in) {\n  int n = strlen(in);\n  return n;\n}\n");
    r.commit("compute length", t += day);

    r.write("util/log.c", "void log_msg(const char* m) {\n  puts(m);\n}\n");
    r.commit("logging helper", t += day, "Bob Dev", "bob@example.com");

    // vulnerability 1 planted here
    r.write("core/parse.c",
            "int parse(char* in) {\n  int n = strlen(in);\n  char buf[16]; strcpy(buf, in);\n  return n;\n}\n");
    r.commit("stage input buffer", t += day);

    r.write("README.md", "# demo\n");
    r.commit("docs only", t += day);  // dropped: no language files

    r.write("util/log.c", "void log_msg(const char* m) {\n  puts(m);  // say it\n}\n");
    r.commit("annotate log line", t += day, "Bob Dev", "bob@example.com");  // comment-only

    r.branch("feature");
    r.write("util/extra.c", "int extra(void) {\n  return 42;\n}\n");
    r.commit("extra helper on branch", t += day, "Carol Dev", "carol@example.com");
    r.checkout("main");
    r.write("core/parse.c",
            "int parse(char* in) {\n  int n = strlen(in);\n  char buf[16]; strcpy(buf, in);\n  return n + 1;\n}\n");
    r.commit("off by one tweak", t += day);
    r.merge("feature", "merge feature branch", t += day);  // dropped: merge

    // fix for vulnerability 1: deletes the strcpy line
    r.write("core/parse.c",
            "int parse(char* in) {\n  int n = strlen(in);\n  return n + 1;\n}\n");
    r.commit("fix CVE-2020-9001 buffer overflow in parser", t += day);

    r.write("util/log.c",
            "void log_msg(const char* m) {\n  if (!m) return;\n  puts(m);  // say it\n}\n");
    r.commit("null guard for logger", t += day, "Bob Dev", "bob@example.com");

    // vulnerability 2 planted here
    r.write("util/extra.c",
            "int extra(void) {\n  system(getenv(\"CMD\"));\n  return 42;\n}\n");
    r.commit("run hook command", t += day, "Carol Dev", "carol@example.com");

    r.write("core/parse.c",
            "int parse(char* in) {\n  int n = strlen(in);\n  return n + 2;\n}\n");
    r.commit("adjust return bias", t += day);

    // fix for vulnerability 2
    r.write("util/extra.c", "int extra(void) {\n  return 42;\n}\n");
    r.commit("fix RCE via hook command", t += day, "Carol Dev", "carol@example.com");

    r.write("util/log.c",
            "void log_msg(const char* m) {\n  if (!m) return;\n  fputs(m, stderr);  // say it\n}\n");
    r.commit("route logs to stderr", t += day, "Bob Dev", "bob@example.com");

    r.write("core/parse.c",
            "int parse(char* in) {\n  int n = strlen(in);\n  return n + 3;\n}\n");
    r.commit("another bias pass", t += day);

    r.write("util/extra.c", "int extra(void) {\n  return 43;\n}\n");
    r.commit("bump the answer", t += day, "Carol Dev", "carol@example.com");

    r.write("core/parse.c",
            "int parse(char* in) {\n  size_t n = strlen(in);\n  return (int)(n + 3);\n}\n");
    r.commit("use size_t for length", t += day);

    return repo;
}

}  // namespace jitvp::testing
