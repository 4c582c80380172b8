#include "optpac/errors.hpp"

#include <sstream>

namespace optpac {

namespace {
std::string budget_message(long double required, unsigned long long budget) {
    std::ostringstream os;
    os << "policy enumeration needs " << static_cast<double>(required)
       << " policies, budget is " << budget;
    return os.str();
}
}  // namespace

BudgetExceeded::BudgetExceeded(long double required, unsigned long long budget)
    : std::runtime_error(budget_message(required, budget)), required_(required), budget_(budget) {}

}  // namespace optpac
