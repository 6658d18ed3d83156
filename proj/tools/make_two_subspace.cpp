// Writes the two-subspace benchmark in sparse-row format.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "seqclf/data_io.hpp"
#include "seqclf/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate the two-subspace benchmark dataset"};
    seqclf::synthetic::TwoSubspaceConfig config;
    std::string out = "-";
    app.add_option("--rows", config.rows, "number of rows")->capture_default_str();
    app.add_option("--seed", config.seed, "generator seed")->capture_default_str();
    app.add_option("--out", out, "output file, - for stdout")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        const auto data = seqclf::synthetic::two_subspace(config);
        if (out == "-") {
            seqclf::data::write_sparse_rows(std::cout, data);
        } else {
            std::ofstream file(out);
            if (!file) {
                std::cerr << "cannot open " << out << "\n";
                return 2;
            }
            seqclf::data::write_sparse_rows(file, data);
        }
    } catch (const seqclf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
