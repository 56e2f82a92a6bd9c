# Property-based tests package
