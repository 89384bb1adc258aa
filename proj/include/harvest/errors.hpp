#pragma once

#include <stdexcept>
#include <string>

namespace harvest {

/// A caller broke a documented precondition (bad argument combination,
/// mismatched inputs, wrong yield class for an operation).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A function was evaluated outside its domain (x <= 0, undefined drift).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The controlled diffusion has no invariant law on (0, inf): the effective
/// stochastic growth rate at zero is non-positive and the only stationary
/// measure is the point mass at zero.
class ExtinctionError : public std::runtime_error {
public:
    explicit ExtinctionError(const std::string& what)
        : std::runtime_error("extinction regime: " + what) {}
};

}  // namespace harvest
