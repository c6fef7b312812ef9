#pragma once

// Shape rules for the plastics scenes (FX17, 900-1700 nm), one rule per
// material, thresholds on signed curvature in band-index coordinates and one
// continuum-removed value condition for black PF.

#include <string_view>

#include "rules.hpp"

namespace specshape::rules {

inline constexpr std::string_view kBuiltinRulesText = R"(# Plastics, 900-1700 nm.
RULE PA {
    CV[1135] < -0.1 AND CV[1246] < -0.1 AND CV[1350] < -0.1 AND CV[1460] < -0.1 AND
    CV[1201] > 0.1 AND CV[1388] > 0.1 AND CV[1529] > 0.1 AND CV[1604] > 0.1
}

RULE PE {
    CV[1139] < -0.1 AND CV[1253] < -0.1 AND CV[1357] < -0.1 AND
    CV[1215] > 0.1 AND CV[1394] > 0.1
}

# Black colorants absorb almost everything; the low continuum-removed value
# carries the decision.
RULE PF-black {
    CV[973] > 0.1 AND CV[1681] > 0.1 AND CRRV[1429] < 0.6
}

RULE PMMA {
    CV[1322] < -0.1 AND CV[1639] < -0.1 AND
    CV[1174] > 0.1 AND CV[1360] > 0.1 AND CV[1432] > 0.1 AND CV[1674] > 0.1
}

RULE PVC {
    CV[1139] < -0.1 AND CV[1236] < -0.1 AND CV[1353] < -0.1 AND
    CV[1194] > 0.1 AND CV[1422] > 0.1
}

RULE PS {
    CV[1108] < -0.1 AND CV[1174] < -0.1 AND CV[1608] < -0.1 AND
    CV[1143] > 0.1 AND CV[1204] > 0.1 AND CV[1677] > 0.1
}

RULE UP {
    CV[1377] < -0.1 AND CV[1488] < -0.1 AND CV[1450] > 0.1
}

RULE PP {
    CV[1128] < -0.1 AND CV[1342] < -0.1 AND
    CV[1190] > 0.1 AND CV[1215] > 0.1 AND CV[1387] > 0.1 AND CV[1694] > 0.1
}

# Two conditions bound the curvature from below only (> -0.1).
RULE ABS {
    CV[1104] < -0.1 AND CV[1152] < -0.1 AND CV[1339] > -0.1 AND CV[1629] > -0.1 AND
    CV[1128] > 0.1 AND CV[1187] > 0.1 AND CV[1415] > 0.1 AND CV[1656] > 0.1
}
)";

/// Reserves the circuit-board class id after the nine material rules. No
/// published conditions exist for it, so the placeholder never fires
/// (calibrated reflectance is clamped at 0).
inline constexpr std::string_view kPcbPlaceholderText = R"(
# Placeholder: printed circuit boards. Replace with real conditions.
RULE PCB {
    RV[1300] < 0
}
)";

inline RuleSet builtin_rules(bool include_pcb_placeholder = false) {
    std::string text(kBuiltinRulesText);
    if (include_pcb_placeholder) text += kPcbPlaceholderText;
    return parse_rules(text);
}

}  // namespace specshape::rules
