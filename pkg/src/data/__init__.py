"""Data model: time series, cohorts, statistic maps and their file formats."""
