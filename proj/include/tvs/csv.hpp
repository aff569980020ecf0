#pragma once

#include <string>

#include "tvs/matrix.hpp"

namespace tvs {

// Comma-separated, header row required, '.' decimals, no quoting.
// The named response column is split out of the covariates.
Dataset read_csv(const std::string& path, const std::string& response_name);

// Values printed with 17 significant digits so a round trip is exact.
void write_csv(const Dataset& data, const std::string& path);

std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& text, const std::string& response_name);

}  // namespace tvs
