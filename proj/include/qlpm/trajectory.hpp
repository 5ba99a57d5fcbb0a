#ifndef QLPM_TRAJECTORY_HPP
#define QLPM_TRAJECTORY_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qlpm/errors.hpp"

namespace qlpm {

/// Time series produced by the propagators: reduced states, named scalar
/// observables, and the trace drift of the full state. A diverged run is
/// truncated at the point the state norm blew past the cap.
struct Trajectory {
    Eigen::VectorXd times;
    std::vector<Eigen::MatrixXcd> reduced_state;
    std::vector<Eigen::MatrixXcd> full_state; // populated only on request
    std::vector<std::string> observable_names;
    std::vector<Eigen::VectorXcd> observable_values; // one series per name
    Eigen::VectorXd trace_drift;
    bool diverged = false;
    double divergence_time = 0.0;

    int n_times() const { return static_cast<int>(times.size()); }

    const Eigen::VectorXcd& observable(const std::string& name) const {
        for (size_t i = 0; i < observable_names.size(); ++i)
            if (observable_names[i] == name) return observable_values[i];
        throw Error("trajectory has no observable named " + name);
    }
};

} // namespace qlpm

#endif
