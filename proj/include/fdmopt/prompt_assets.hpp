#pragma once

#include <string_view>

// Versioned prompt text shipped in assets/ and embedded at build time.
namespace fdmopt::assets {

std::string_view system_prompt();
std::string_view worked_examples();
std::string_view output_contract();

}  // namespace fdmopt::assets
