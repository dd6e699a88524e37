#pragma once

#include <stdexcept>
#include <string>

namespace qsp {

// Bad input: wrong sizes, parity violations, targets with sup-norm >= 1.
class invalid_argument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Evaluation point outside [-1, 1].
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Result cannot be trusted at the working precision.
class precision_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Iterative method or construction failed to deliver.
class numerical_failure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace qsp
