import gettext
from pathlib import Path

DOMAIN = "mrtime"
LOCALE_DIR = str(Path(__file__).resolve().parent)

_translators = dict()


def install(lang: str):
    gettext.bindtextdomain(DOMAIN, LOCALE_DIR)
    gettext.textdomain(DOMAIN)

    # missing catalogs fall back to the untranslated messages
    if lang not in _translators:
        _translators[lang] = gettext.translation(
            DOMAIN, LOCALE_DIR, languages=[lang], fallback=True
        )
    _translators[lang].install()
