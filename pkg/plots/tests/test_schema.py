import numpy as np
import pytest

from missing_bandits_plots.schema import (
    CSV_HEADER,
    SchemaError,
    read_results_csv,
)

GOOD = """\
experiment,policy,replication,t,cum_regret
demo,PolA,0,10,1.0
demo,PolA,0,20,2.5
demo,PolA,1,10,2.0
demo,PolA,1,20,3.5
demo,PolB,0,10,0.5
demo,PolB,0,20,0.75
demo,PolB,1,10,1.5
demo,PolB,1,20,1.25
"""


@pytest.fixture
def good_csv(tmp_path):
    path = tmp_path / "demo.csv"
    path.write_text(GOOD)
    return str(path)


class TestHappyPath:
    def test_structure(self, good_csv):
        table = read_results_csv(good_csv)
        assert table.experiment == "demo"
        assert table.times == [10, 20]
        assert table.policies == ["PolA", "PolB"]
        assert table.replications("PolA") == [0, 1]
        np.testing.assert_array_equal(table["PolA"][1], [2.0, 3.5])

    def test_mean_and_std(self, good_csv):
        table = read_results_csv(good_csv)
        np.testing.assert_allclose(table.mean("PolA"), [1.5, 3.0])
        np.testing.assert_allclose(
            table.std("PolA"),
            np.array([[1.0, 2.5], [2.0, 3.5]]).std(axis=0, ddof=1),
        )

    def test_single_replication_std_zero(self, tmp_path):
        path = tmp_path / "one.csv"
        path.write_text(CSV_HEADER + "\nx,P,0,5,1.0\nx,P,0,10,2.0\n")
        table = read_results_csv(str(path))
        np.testing.assert_array_equal(table.std("P"), [0.0, 0.0])


class TestValidation:
    def test_header_typo_names_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("experiment,polcy,replication,t,cum_regret\n")
        with pytest.raises(SchemaError, match="'policy', found 'polcy'"):
            read_results_csv(str(path))

    def test_missing_header_column_named(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("experiment,policy,replication,t\n")
        with pytest.raises(SchemaError, match="missing column 'cum_regret'"):
            read_results_csv(str(path))

    def test_extra_header_column_named(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(CSV_HEADER + ",note\n")
        with pytest.raises(SchemaError, match="extra header column 'note'"):
            read_results_csv(str(path))

    def test_bad_value_names_row_and_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(CSV_HEADER + "\nx,P,0,10,fast\n")
        with pytest.raises(SchemaError, match="row 2, column cum_regret"):
            read_results_csv(str(path))
        path.write_text(CSV_HEADER + "\nx,P,zero,10,1.0\n")
        with pytest.raises(SchemaError, match="column replication"):
            read_results_csv(str(path))

    def test_short_row_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(CSV_HEADER + "\nx,P,0,10\n")
        with pytest.raises(SchemaError, match="row 2 has 4 columns"):
            read_results_csv(str(path))

    def test_inconsistent_checkpoints_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            CSV_HEADER + "\nx,P,0,10,1.0\nx,P,0,20,2.0\nx,Q,0,10,1.0\nx,Q,0,30,2.0\n"
        )
        with pytest.raises(SchemaError, match="column t.*'Q'"):
            read_results_csv(str(path))

    def test_empty_and_headerless_files(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("")
        with pytest.raises(SchemaError, match="empty"):
            read_results_csv(str(path))
        path.write_text(CSV_HEADER + "\n")
        with pytest.raises(SchemaError, match="no data rows"):
            read_results_csv(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(SchemaError, match="cannot read"):
            read_results_csv(str(tmp_path / "nope.csv"))
