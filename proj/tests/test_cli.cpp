#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace
{

struct Result
{
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "iontrap-sim");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = iontrap::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path temp_file(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("iontrap_cli_" + name);
}

void write(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream(p) << text;
}

} // namespace

TEST_SUITE("cli")
{
    TEST_CASE("presets listing and dump")
    {
        const auto list = invoke({"presets"});
        CHECK(list.code == 0);
        CHECK(list.out.find("fig3_nir") != std::string::npos);
        const auto one = invoke({"presets", "--name", "fig2_repump"});
        CHECK(one.code == 0);
        CHECK(one.out.find("\"repump\"") != std::string::npos);
        CHECK(invoke({"presets", "--name", "nope"}).code == 2);
    }

    TEST_CASE("potential table and slices")
    {
        const auto csv = temp_file("slices.csv");
        const auto r = invoke({"potential", "--preset", "fig2_norepump", "--out", csv.string()});
        CHECK(r.code == 0);
        CHECK(r.out.find("S1/2") != std::string::npos);
        CHECK(r.out.find("repulsive") != std::string::npos);
        const auto text = slurp(csv);
        CHECK(text.rfind("axis,offset_m,S1/2_mk", 0) == 0);
        std::filesystem::remove(csv);
    }

    TEST_CASE("rates with band")
    {
        const auto csv = temp_file("band.csv");
        const auto r =
            invoke({"rates", "--preset", "fig2_norepump", "--samples", "200", "--out", csv.string()});
        CHECK(r.code == 0);
        CHECK(r.out.find("lifetime_ms") != std::string::npos);
        CHECK(slurp(csv).rfind("duration_s,p_point,p_lo,p_hi", 0) == 0);
        std::filesystem::remove(csv);
        CHECK(invoke({"rates", "--preset", "fig2_norepump", "--level", "D3/2"}).code != 0);
    }

    TEST_CASE("lifetime runs are reproducible across thread counts")
    {
        auto cfg = temp_file("quick.json");
        const auto dump = invoke({"presets", "--name", "fig2_norepump"});
        std::string text = dump.out;
        const auto key = text.find("\"hold_durations_s\"");
        const auto end = text.find(']', key);
        text.replace(key, end - key + 1, "\"hold_durations_s\": [0.001, 0.003, 0.01]");
        write(cfg, text);

        const auto a = temp_file("a.csv");
        const auto b = temp_file("b.csv");
        const auto ra = invoke({"lifetime", "--config", cfg.string(), "--trials", "8", "--threads", "1", "--seed",
                                "5", "--out", a.string()});
        const auto rb = invoke({"lifetime", "--config", cfg.string(), "--trials", "8", "--threads", "3", "--seed",
                                "5", "--out", b.string()});
        CHECK(ra.code == 0);
        CHECK(rb.code == 0);
        CHECK_FALSE(slurp(a).empty());
        CHECK(slurp(a) == slurp(b));
        for (const auto& p : {cfg, a, b})
            std::filesystem::remove(p);
    }

    TEST_CASE("thermometry from count files")
    {
        const auto d1 = temp_file("t1.csv");
        const auto d2 = temp_file("t2.csv");
        write(d1, "depth_k,successes,trials\n0.0005,34,100\n0.001,74,100\n0.002,95,100\n0.004,100,100\n");
        write(d2, "depth_k,successes,trials\n0.0005,16,100\n0.001,44,100\n0.002,80,100\n0.004,97,100\n");
        const auto r = invoke({"thermometry", "--data", d1.string(), "--data", d2.string(), "--delay", "0.5"});
        CHECK(r.code == 0);
        CHECK(r.out.find("temperature_uk") != std::string::npos);
        CHECK(r.out.find("heating_uk_per_s") != std::string::npos);
        CHECK(invoke({"thermometry", "--data", d1.string(), "--data", d2.string()}).code == 2);
        CHECK(invoke({"thermometry", "--data", d1.string(), "--model", "gauss"}).code == 2);
        write(d2, "x,successes,trials\n1,2,3\n");
        CHECK(invoke({"thermometry", "--data", d2.string()}).code == 2);
        CHECK(invoke({"thermometry", "--preset", "fig3_nir"}).code == 2);
        std::filesystem::remove(d1);
        std::filesystem::remove(d2);
    }

    TEST_CASE("bad input exits with code 2")
    {
        CHECK(invoke({"lifetime"}).code == 2);
        CHECK(invoke({"lifetime", "--preset", "nope"}).code == 2);
        CHECK(invoke({"lifetime", "--config", "/nonexistent.json"}).code == 2);
        CHECK(invoke({"lifetime", "--preset", "fig3_nir", "--config", "x.json"}).code == 2);
        CHECK(invoke({"frobnicate"}).code == 2);
        const auto bad = temp_file("bad.json");
        write(bad, "{\"name\": \"x\", \"bogus_field\": 1}");
        const auto r = invoke({"lifetime", "--config", bad.string()});
        CHECK(r.code == 2);
        CHECK(r.err.find("bogus_field") != std::string::npos);
        std::filesystem::remove(bad);
    }
}
