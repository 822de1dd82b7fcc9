import pytest

from roughswitch.synthetic import make_synthetic_market


@pytest.fixture(scope="session")
def market(tmp_path_factory):
    """Synthetic price and option files; returns (prices_path, options_path, iso_dates)."""
    root = tmp_path_factory.mktemp("market")
    prices, options, days = make_synthetic_market(ticker="SYN", n_days=260, seed=7)
    pp, op = root / "prices.csv", root / "options.csv"
    pp.write_text(prices)
    op.write_text(options)
    return str(pp), str(op), days


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
