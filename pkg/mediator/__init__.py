# Mediator CLI Package
