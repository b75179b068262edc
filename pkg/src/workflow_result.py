from dataclasses import dataclass
from typing import Any, Optional


@dataclass
class WorkflowResult:
    """Result of a workflow execution"""
    success: bool
    data: Optional[Any] = None
    error: Optional[str] = None
    exit_code: int = 0
