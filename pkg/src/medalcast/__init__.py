"""Hybrid ARIMA-LSTM medal forecasting toolkit."""
