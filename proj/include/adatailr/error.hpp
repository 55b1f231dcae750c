#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adatailr {

enum class Errc {
    zero_mass,
    negative_entry,
    dim_too_small,
    dim_mismatch,
    not_normalized,
    index_out_of_range,
    gamma_out_of_range,
    non_positive_lambda,
    invalid_argument,
    bad_shape,
    non_positive_concentration,
    missing_noise_rows,
    shape_mismatch,
    non_positive_learning_rate,
    one_class_only,
    empty_context,
    size_exceeds_corpus,
    io_error,
    parse_error,
};

std::string_view to_string(Errc code);

/// Exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace adatailr
