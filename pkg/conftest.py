import translation

translation.install("en")
