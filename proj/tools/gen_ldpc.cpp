// Generates the shipped LDPC parity-check matrices (alist format): the
// (3,6)-regular rate-1/2 codes at n=96 (tests) and n=1024 (runs), and a
// (3,9)-regular rate-2/3 code at n=1536. Girth >= 6 and full rank are
// enforced by the generator; this tool just fixes the seeds and filenames.
#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "mhpsc/detail/wire.hpp"
#include "mhpsc/ldpc.hpp"

int main(int argc, char** argv) {
    CLI::App app{"generate the shipped LDPC codes"};
    std::string out_dir = "data/ldpc";
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    struct Spec {
        const char* name;
        int n, col_w, row_w;
        uint64_t seed;
    };
    const Spec specs[] = {
        {"ldpc_n96_k48.alist", 96, 3, 6, 101},
        {"ldpc_n1024_k512.alist", 1024, 3, 6, 102},
        {"ldpc_n1536_k1024.alist", 1536, 3, 9, 103},
    };
    std::filesystem::create_directories(out_dir);
    for (const auto& s : specs) {
        const auto code = mhpsc::modem::ldpc_generate_regular(s.n, s.col_w, s.row_w, s.seed);
        const std::string text = mhpsc::modem::ldpc_to_alist(code);
        const std::string path = out_dir + "/" + s.name;
        mhpsc::wire::write_file(path, std::vector<uint8_t>(text.begin(), text.end()));
        std::printf("%s: n=%d m=%d k=%d\n", path.c_str(), code.n, code.m, code.k());
    }
    return 0;
}
