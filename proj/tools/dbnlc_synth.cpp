// Regenerates the bundled synthetic dataset: questionnaire.csv plus
// per-session AU frame files, rolled out from the built-in ground-truth
// network.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dbnlc/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"generate the bundled synthetic longitudinal dataset"};
    std::string out = "data/synthetic";
    dbnlc::SyntheticOptions opts;
    app.add_option("--out", out, "output directory");
    app.add_option("--subjects", opts.subjects, "number of subjects");
    app.add_option("--weeks", opts.weeks, "number of weekly sessions");
    app.add_option("--seed", opts.seed, "generator seed");
    CLI11_PARSE(app, argc, argv);

    try {
        dbnlc::write_synthetic_dataset(out, opts);
        std::cerr << "wrote dataset to " << out << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
