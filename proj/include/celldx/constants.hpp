#pragma once

namespace celldx {

// Physical constants (SI).
inline constexpr double kFaraday = 96485.0;   // C/mol
inline constexpr double kGasConst = 8.314;    // J/(mol K)
inline constexpr double kTempRef = 298.15;    // K, isothermal operation

} // namespace celldx
