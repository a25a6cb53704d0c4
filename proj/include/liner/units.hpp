#pragma once

// Unit conventions used throughout:
//   prices             USD per TEU (1995 CPI)
//   quantities/tonnage TEU
//   static profits     USD
//   dynamic costs      100 billion USD
//   welfare            billion USD
namespace liner::units {

inline constexpr double kUsdPerDynamicUnit = 1e11;
inline constexpr double kUsdPerWelfareUnit = 1e9;

inline constexpr double usd_to_dynamic(double usd) { return usd / kUsdPerDynamicUnit; }
inline constexpr double usd_to_welfare(double usd) { return usd / kUsdPerWelfareUnit; }
inline constexpr double dynamic_to_welfare(double v) { return v * (kUsdPerDynamicUnit / kUsdPerWelfareUnit); }

inline constexpr double kEulerGamma = 0.5772156649015329;

}  // namespace liner::units
