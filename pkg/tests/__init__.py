# Test placeholder - will be populated by test_core.py
