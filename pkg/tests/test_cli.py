"""
Test suite per l'interfaccia a riga di comando.

Verifica:
- Parsing e validazione della configurazione
- Formato dei file CSV e JSON
- Determinismo degli output
- Codici di uscita
"""

import json

import pytest
import pandas as pd

from mpre.brownian import sample_brownian
from mpre.cli import RunConfig, main, parse_config, parse_windows, read_config_file
from mpre.errors import ConfigError
from mpre.exponent import ExponentSpec


@pytest.fixture(autouse=True)
def no_thread_env(monkeypatch):
    """Ignora MPRE_THREADS dell'ambiente."""
    monkeypatch.delenv("MPRE_THREADS", raising=False)


def _read_output(file):
    """Separa intestazione # e tabella di un CSV prodotto dalla CLI."""
    lines = file.read_text().splitlines()
    header = [l for l in lines if l.startswith("#")]
    table = pd.read_csv(file, comment="#", float_precision="round_trip")
    return header, table


class TestParseConfig:
    """Test per parse_config()."""

    def test_simulate(self):
        """Verifica il parsing di un comando simulate."""
        config = parse_config(["simulate", "--scheme", "hat", "--J", "10", "--seed", "7",
                               "--exponent", "rl:0.9:0.55:0.95"])
        assert isinstance(config, RunConfig)
        assert config.command == "simulate"
        assert config.J == 10
        assert config.seed == 7
        assert config.time_spec == "dyadic:10"
        assert config.threads == 1

    def test_defaults(self):
        """Verifica i valori di default."""
        config = parse_config(["simulate"])
        assert config.J == 12
        assert config.J_ref == 16
        assert config.exponent == "const:0.7"
        assert config.scheme == "hat"
        assert config.format == "csv"

    def test_exponent_out_of_range(self):
        """Verifica che const:0.5 sia un errore d'uso."""
        with pytest.raises(ConfigError, match="1/2"):
            parse_config(["simulate", "--exponent", "const:0.5"])

    def test_reference_headroom(self):
        """Verifica il rifiuto di J_ref < J + 4 negli studi con riferimento."""
        with pytest.raises(ConfigError, match="J_ref deve superare J di almeno 4"):
            parse_config(["convergence", "--J", "14", "--J-ref", "15"])

    def test_j_max_is_top_level(self):
        """Verifica che --j-max fissi l'ultimo livello e il margine del riferimento."""
        config = parse_config(["convergence", "--J", "14", "--j-min", "4", "--j-max", "9", "--J-ref", "13"])
        assert config.top_level == 9
        assert parse_config(["convergence", "--J", "10"]).top_level == 10
        with pytest.raises(ConfigError, match="J_ref"):
            parse_config(["convergence", "--j-max", "10", "--J-ref", "13"])
        with pytest.raises(ConfigError, match="j_min <= j_max"):
            parse_config(["convergence", "--j-min", "8", "--j-max", "7"])

    def test_coeffs_default_times(self):
        """Verifica la griglia ridotta di default per coeffs."""
        assert parse_config(["coeffs", "--J", "10"]).time_spec == "dyadic:2"
        assert parse_config(["coeffs", "--J", "1"]).time_spec == "dyadic:1"
        assert parse_config(["simulate", "--J", "12"]).time_spec == "dyadic:10"

    def test_output_not_writable(self, tmp_path, monkeypatch):
        """Verifica l'errore d'uso per una cartella di output non scrivibile."""
        monkeypatch.setattr("mpre.cli.os.access", lambda path, mode: False)
        with pytest.raises(ConfigError, match="non scrivibile"):
            parse_config(["simulate", "--out", str(tmp_path / "x.csv")])

    def test_l1_study_ignores_reference(self):
        """Verifica che lo studio L1 non richieda J_ref."""
        config = parse_config(["convergence", "--study", "l1", "--J", "14", "--J-ref", "15"])
        assert config.study == "l1"

    def test_unknown_flag(self):
        """Verifica errore per flag sconosciuti."""
        with pytest.raises(ConfigError):
            parse_config(["simulate", "--colour", "red"])

    def test_missing_command(self):
        """Verifica errore senza sottocomando."""
        with pytest.raises(ConfigError, match="sottocomando"):
            parse_config([])

    def test_bad_times(self):
        """Verifica errore per una griglia non valida."""
        with pytest.raises(ConfigError):
            parse_config(["simulate", "--times", "list:2"])

    def test_threads(self, monkeypatch):
        """Verifica --threads e il fallback MPRE_THREADS."""
        assert parse_config(["simulate", "--threads", "4"]).threads == 4
        monkeypatch.setenv("MPRE_THREADS", "3")
        assert parse_config(["simulate"]).threads == 3
        with pytest.raises(ConfigError):
            parse_config(["simulate", "--threads", "0"])

    def test_metadata(self):
        """Verifica che i metadati contengano la configurazione risolta."""
        meta = parse_config(["holder", "--windows", "0:0.5,0.5:1"]).metadata()
        assert meta["windows"] == "0.0:0.5,0.5:1.0"
        assert meta["times"] == "dyadic:10"
        assert "version" in meta
        assert "threads" not in meta


class TestConfigFile:
    """Test per il file di configurazione key=value."""

    def test_values_used_as_defaults(self, tmp_path):
        """Verifica che i valori del file facciano da default."""
        file = tmp_path / "run.cfg"
        file.write_text("# prova\nJ = 8\nexponent=sin:0.6:0.9:1\nn-seeds=5\n")
        config = parse_config(["simulate", "--config", str(file)])
        assert config.J == 8
        assert config.exponent == "sin:0.6:0.9:1"
        assert config.n_seeds == 5

    def test_flags_override_file(self, tmp_path):
        """Verifica che i flag espliciti vincano sul file."""
        file = tmp_path / "run.cfg"
        file.write_text("J=8\n")
        assert parse_config(["simulate", "--config", str(file), "--J", "9"]).J == 9

    def test_unknown_key(self, tmp_path):
        """Verifica errore per chiavi sconosciute."""
        file = tmp_path / "run.cfg"
        file.write_text("colour=red\n")
        with pytest.raises(ConfigError, match="Chiavi sconosciute"):
            parse_config(["simulate", "--config", str(file)])

    def test_malformed_line(self, tmp_path):
        """Verifica errore per righe senza '='."""
        file = tmp_path / "run.cfg"
        file.write_text("J 8\n")
        with pytest.raises(ConfigError, match="key=value"):
            read_config_file(str(file))

    def test_missing_file(self, tmp_path):
        """Verifica errore per file inesistente."""
        with pytest.raises(ConfigError, match="non leggibile"):
            read_config_file(str(tmp_path / "assente.cfg"))


class TestParseWindows:
    """Test per parse_windows()."""

    def test_valid(self):
        """Verifica il parsing di piu' finestre."""
        assert parse_windows("0:0.5, 0.25:1") == [(0.0, 0.5), (0.25, 1.0)]

    @pytest.mark.parametrize("text", ["0.5", "0.5:0.2", "0:2", "a:b"])
    def test_invalid(self, text):
        """Verifica il rifiuto di finestre malformate o vuote."""
        with pytest.raises(ConfigError):
            parse_windows(text)


class TestSimulateCommand:
    """Test per il sottocomando simulate."""

    def test_csv_output(self, tmp_path):
        """Verifica intestazione e numero di righe del CSV."""
        out = tmp_path / "x.csv"
        assert main(["simulate", "--J", "6", "--seed", "7", "--out", str(out)]) == 0

        header, table = _read_output(out)
        assert list(table.columns) == ["t", "value", "scheme", "J", "seed"]
        assert len(table) == 65
        assert table["t"].iloc[0] == 0.0
        assert table["value"].iloc[0] == 0.0
        assert (table["seed"] == 7).all()
        assert "# J=6" in header
        assert "# exponent=const:0.7" in header

    def test_repeat_is_byte_identical(self, tmp_path):
        """Verifica output identici byte per byte su due esecuzioni."""
        out = tmp_path / "x.csv"
        argv = ["simulate", "--J", "8", "--seed", "3", "--exponent", "rl:0.9:0.55:0.95", "--out", str(out)]
        assert main(argv) == 0
        first = out.read_bytes()
        assert main(argv) == 0
        assert out.read_bytes() == first

    def test_threads_do_not_change_output(self, capsys):
        """Verifica output identici con 1 e 8 thread."""
        argv = ["simulate", "--J", "12", "--seed", "5", "--exponent", "sin:0.6:0.9:1"]
        assert main(argv + ["--threads", "1"]) == 0
        one = capsys.readouterr().out
        assert main(argv + ["--threads", "8"]) == 0
        eight = capsys.readouterr().out
        assert one == eight
        assert one.startswith("#")

    def test_json_output(self, tmp_path):
        """Verifica il formato JSON con configurazione e dati."""
        out = tmp_path / "x.json"
        assert main(["simulate", "--J", "4", "--scheme", "tilde", "--format", "json", "--out", str(out)]) == 0

        body = json.loads(out.read_text())
        assert body["config"]["scheme"] == "tilde"
        assert body["config"]["J"] == 4
        assert len(body["data"]["t"]) == 17
        assert body["data"]["value"][0] == 0.0

    def test_list_times_and_haar(self, tmp_path):
        """Verifica la griglia a lista con lo schema haar."""
        out = tmp_path / "x.csv"
        assert main(["simulate", "--J", "5", "--scheme", "haar", "--times", "list:0.25,0.5,1",
                     "--out", str(out)]) == 0
        _, table = _read_output(out)
        assert table["t"].tolist() == [0.25, 0.5, 1.0]
        assert (table["scheme"] == "haar").all()

    def test_plot_data(self, tmp_path):
        """Verifica il file di terne (t, X, A)."""
        out = tmp_path / "x.csv"
        data = tmp_path / "plot.csv"
        assert main(["simulate", "--J", "6", "--exponent", "sin:0.6:0.9:1", "--out", str(out),
                     "--emit-plot-data", str(data)]) == 0
        table = pd.read_csv(data, float_precision="round_trip")
        assert list(table.columns) == ["t", "X", "A"]
        assert table["A"].between(0.6, 0.9).all()

        A = ExponentSpec.parse("sin:0.6:0.9:1").build(sample_brownian(0, 6))
        assert table["A"].tolist() == A.eval(table["t"].to_numpy()).tolist()
        _, series = _read_output(out)
        assert table["X"].tolist() == series["value"].tolist()

    def test_plot_png(self, tmp_path):
        """Verifica la creazione della figura riassuntiva."""
        out = tmp_path / "x.csv"
        png = tmp_path / "x.png"
        assert main(["simulate", "--J", "8", "--out", str(out), "--plot", str(png)]) == 0
        assert png.exists()
        assert png.stat().st_size > 0


class TestOtherCommands:
    """Test per convergence, holder, coeffs e selftest."""

    def test_coeffs(self, tmp_path, capsys):
        """Verifica prodotti <K_t, h_jk> e limite 2^(-j/2) per ogni tempo."""
        out = tmp_path / "c.csv"
        assert main(["coeffs", "--J", "3", "--seed", "1", "--exponent", "const:0.75",
                     "--times", "list:0.5,1", "--out", str(out)]) == 0
        _, table = _read_output(out)
        assert list(table.columns) == ["j", "k", "t", "inner_product", "bound_2^{-j/2}"]
        assert len(table) == 2 * (1 + 2 + 4)
        assert (table["inner_product"].abs() <= table["bound_2^{-j/2}"]).all()
        assert table["bound_2^{-j/2}"].tolist() == [2.0 ** (-j / 2) for j in table["j"]]

        # (1 - s)^(1/4) integrato su [0, 1/2] meno [1/2, 1]
        first = table[(table["t"] == 1.0) & (table["j"] == 0)]["inner_product"].iloc[0]
        assert first == pytest.approx((1.0 - 2.0 * 0.5 ** 1.25) / 1.25, abs=1e-6)
        assert "Violazioni" in capsys.readouterr().err

    def test_holder(self, tmp_path):
        """Verifica una riga per seed e finestra."""
        out = tmp_path / "h.csv"
        code = main(["holder", "--J", "10", "--n-seeds", "2", "--windows", "0:0.5,0.5:1", "--out", str(out)])
        assert code in (0, 2)
        _, table = _read_output(out)
        assert len(table) == 4
        assert table["min_A"].eq(0.7).all()

    def test_convergence_l1(self, tmp_path):
        """Verifica lo studio L1 in formato JSON."""
        out = tmp_path / "l1.json"
        assert main(["convergence", "--study", "l1", "--J", "7", "--j-min", "4", "--n-seeds", "20",
                     "--format", "json", "--out", str(out)]) == 0
        body = json.loads(out.read_text())
        assert body["data"]["levels"] == [4, 5, 6, 7]
        assert body["data"]["passed"] is True

    def test_convergence_failure_exit_code(self, tmp_path):
        """Verifica il codice 2 quando la pendenza non supera la verifica."""
        out = tmp_path / "sup.csv"
        code = main(["convergence", "--J", "9", "--J-ref", "13", "--j-min", "6", "--tolerance", "-1",
                     "--out", str(out)])
        assert code == 2
        _, table = _read_output(out)
        assert table["J"].tolist() == [6, 7, 8, 9]

    def test_selftest(self, capsys):
        """Verifica che la suite di invarianti passi."""
        assert main(["selftest"]) == 0
        assert "5/5 controlli superati" in capsys.readouterr().out


class TestExitCodes:
    """Test per i codici di uscita di main()."""

    def test_usage_errors(self, tmp_path):
        """Verifica il codice 1 per errori d'uso."""
        assert main(["simulate", "--exponent", "const:0.5"]) == 1
        assert main(["bogus"]) == 1
        assert main(["simulate", "--out", str(tmp_path / "manca" / "x.csv")]) == 1

    def test_io_error(self, tmp_path):
        """Verifica il codice 3 per un file esponente inesistente."""
        assert main(["simulate", "--J", "4", "--exponent", f"file:{tmp_path / 'manca.csv'}"]) == 3

    def test_numeric_error(self):
        """Verifica il codice 2 per un errore numerico (livello insufficiente per l'esponente RL)."""
        assert main(["simulate", "--J", "5", "--exponent", "rl:0.9:0.55:0.95"]) == 2


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
