#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace anderson {

// Base of every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class invalid_argument : public error {
public:
    using error::error;
};

// An eigenpair failed the residual test or the sweep budget ran out.
class convergence_failure : public error {
public:
    explicit convergence_failure(std::size_t index)
        : error("eigenpair " + std::to_string(index) + " failed to converge"), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

// A combination refers to a localization center that no state occupies.
class missing_center : public error {
public:
    explicit missing_center(long site)
        : error("no state localized at site " + std::to_string(site)), site_(site) {}
    long site() const noexcept { return site_; }

private:
    long site_;
};

class degenerate_level : public error {
public:
    degenerate_level(std::size_t n, std::size_t k)
        : error("levels " + std::to_string(n) + " and " + std::to_string(k) + " are degenerate"),
          n_(n), k_(k) {}
    std::size_t level() const noexcept { return n_; }
    std::size_t partner() const noexcept { return k_; }

private:
    std::size_t n_, k_;
};

class degenerate_direction : public error {
public:
    using error::error;
};

class empty_ensemble : public error {
public:
    empty_ensemble() : error("ensemble is empty") {}
};

class grid_out_of_range : public error {
public:
    using error::error;
};

class all_samples_zero : public error {
public:
    all_samples_zero() : error("every sample of f is exactly zero") {}
};

class degenerate_fit : public error {
public:
    using error::error;
};

class schema_mismatch : public error {
public:
    using error::error;
};

class config_error : public error {
public:
    using error::error;
};

class io_error : public error {
public:
    using error::error;
};

// More realizations failed numerically than the run tolerates.
class failure_budget_exceeded : public error {
public:
    using error::error;
};

} // namespace anderson
