"""
Script di verifica dell'installazione del toolkit MPRE.

Esegui questo script dopo l'installazione per verificare che tutto funzioni correttamente.
"""

import sys


def check_imports():
    """Verifica che tutti i moduli siano importabili."""
    print("Verifica imports...")

    for name, hint in (
        ("pandas", "pip install pandas"),
        ("numpy", "pip install numpy"),
        ("scipy", "pip install scipy"),
        ("matplotlib", "pip install matplotlib"),
        ("mpre", "pip install -e ."),
    ):
        try:
            __import__(name)
            print(f"✓ {name} installato")
        except ImportError:
            print(f"✗ {name} NON installato - esegui: {hint}")
            return False

    return True


def check_api():
    """Verifica che le API principali siano disponibili."""
    print("\nVerifica API...")

    try:
        from mpre import sample_brownian, haar_coefficients, make_rl_exponent, simulate_hat, simulate_tilde
        print("✓ Funzioni di simulazione disponibili")
    except ImportError as e:
        print(f"✗ Errore import funzioni di simulazione: {e}")
        return False

    try:
        from mpre.plot import plot_exponent, plot_paths, plot_overview
        print("✓ Funzioni plot disponibili")
    except ImportError as e:
        print(f"✗ Errore import funzioni plot: {e}")
        return False

    try:
        from mpre.cli import main
        print("✓ CLI disponibile")
    except ImportError as e:
        print(f"✗ Errore import CLI: {e}")
        return False

    return True


def check_basic_functionality():
    """Verifica i valori calcolati a mano su un cammino di livello 1."""
    print("\nVerifica funzionalità base...")

    try:
        from mpre import BrownianPath, make_constant, simulate_hat, simulate_tilde

        path = BrownianPath(level=1, increments=[0.3, 0.1], seed=0)
        A = make_constant(0.75)

        tilde = simulate_tilde(path, A, [1.0]).values[0]
        assert abs(tilde - 0.3840896) < 1e-7, f"X~ = {tilde}"
        print("✓ Schema a punto sinistro corretto")

        hat = simulate_hat(path, A, [1.0]).values[0]
        assert abs(hat - 0.3454566) < 1e-7, f"X^ = {hat}"
        print("✓ Schema a media di cella corretto")

        return True

    except Exception as e:
        print(f"✗ Errore nel test funzionalità: {e}")
        import traceback
        traceback.print_exc()
        return False


def main():
    """Funzione principale."""
    print("=" * 60)
    print("Verifica installazione MPRE")
    print("=" * 60)
    print()

    success = check_imports()
    if not success:
        print("\n⚠ Installa le dipendenze mancanti e riprova.")

    if success and not check_api():
        success = False

    if success and not check_basic_functionality():
        success = False

    print()
    print("=" * 60)
    if success:
        print("✓ INSTALLAZIONE VERIFICATA CON SUCCESSO!")
        print("=" * 60)
        print()
        print("Prossimi passi:")
        print("  1. Esegui l'esempio: python example.py")
        print("  2. Esegui i test: pytest (aggiungi -m slow per le verifiche Monte Carlo)")
        print("  3. Prova la CLI: mpre selftest")
        return 0
    else:
        print("✗ INSTALLAZIONE INCOMPLETA O ERRORI")
        print("=" * 60)
        print()
        print("Risolvi gli errori sopra e riprova.")
        return 1


if __name__ == "__main__":
    sys.exit(main())
