"""wavereg test suite."""
