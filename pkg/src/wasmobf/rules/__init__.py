from .base import (DEFAULT_FP_API_NAMES, DEFAULT_SENSITIVE_CALLEES,  # noqa: F401
                   RuleConfig, load_name_list)
from .engine import ALL_RULES, apply_all, parse_rule_set  # noqa: F401
