"""fairaudit: audits candidate credit-model pools under disparate impact and
UDAP unfairness, reporting where the two doctrines diverge."""

__version__ = "0.1.0"
