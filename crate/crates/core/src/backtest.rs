//! Backtest orchestration (under construction).
