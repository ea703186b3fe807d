# -*- coding: utf-8 -*-
"""
Module: wsgi.py

This module serves as the entry point for running the Flask application using
a WSGI server. It builds the app with the settings found in the environment.

Usage:
This file is commonly used in production with a WSGI server such as Gunicorn or
waitress. For example:
    gunicorn wsgi:app
    waitress-serve --port 5000 wsgi:app

Direct Execution:
The app can also be started using Flask's built-in development server by running:
    python wsgi.py

Notes:
- The built-in server is not suitable for production and should only be used
  for local development.
"""


from app import create_app

app = create_app()

if __name__ == "__main__":
    app.run()
